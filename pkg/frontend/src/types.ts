/** The "actmap/1" document contract produced by the detection engine. */

export const SCHEMA = "actmap/1";

export interface ClusterEntry {
  kind: string;
  person: string;
  t_start: number;
  t_end: number;
  n: number;
  p_mean: number;
  link: string;
}

export interface FnInterval {
  person: string;
  kind: string;
  t_start: number;
  t_end: number;
}

export interface Evaluation {
  tp: number[];
  fp: number[];
  fn: FnInterval[];
}

export interface SessionInfo {
  id: string;
  duration_seconds: number;
  video_url: string;
}

export interface ActivityMapDoc {
  schema: string;
  session: SessionInfo;
  parameters: Record<string, unknown>;
  clusters: ClusterEntry[];
  evaluation?: Evaluation;
}

/** Validation failure; `field` names the offending document path. */
export class DocValidationError extends Error {
  constructor(readonly field: string, detail: string) {
    super(`invalid activity map document: ${field} ${detail}`);
  }
}

function req(cond: boolean, field: string, detail: string): asserts cond {
  if (!cond) throw new DocValidationError(field, detail);
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Parse and validate an untyped JSON payload into an ActivityMapDoc. */
export function parseDoc(raw: unknown): ActivityMapDoc {
  req(typeof raw === "object" && raw !== null, "document", "must be a JSON object");
  const doc = raw as Record<string, unknown>;
  req(doc.schema === SCHEMA, "schema", `must be "${SCHEMA}", got "${String(doc.schema)}"`);

  req(typeof doc.session === "object" && doc.session !== null, "session", "must be an object");
  const session = doc.session as Record<string, unknown>;
  req(typeof session.id === "string", "session.id", "must be a string");
  req(isNum(session.duration_seconds) && session.duration_seconds >= 0,
    "session.duration_seconds", "must be a non-negative number");
  req(typeof session.video_url === "string", "session.video_url", "must be a string");

  req(Array.isArray(doc.clusters), "clusters", "must be an array");
  const clusters = (doc.clusters as unknown[]).map((entry, i) => {
    const path = `clusters[${i}]`;
    req(typeof entry === "object" && entry !== null, path, "must be an object");
    const c = entry as Record<string, unknown>;
    req(typeof c.kind === "string", `${path}.kind`, "must be a string");
    req(typeof c.person === "string", `${path}.person`, "must be a string");
    req(isNum(c.t_start), `${path}.t_start`, "must be a number");
    req(isNum(c.t_end) && (c.t_end as number) > (c.t_start as number),
      `${path}.t_end`, "must be a number greater than t_start");
    req(isNum(c.n) && (c.n as number) >= 1, `${path}.n`, "must be a count >= 1");
    req(isNum(c.p_mean) && (c.p_mean as number) > 0 && (c.p_mean as number) < 1,
      `${path}.p_mean`, "must be in (0,1)");
    req(typeof c.link === "string", `${path}.link`, "must be a string");
    req((c.t_end as number) <= (session.duration_seconds as number) + 1e-9,
      `${path}.t_end`, "must lie within the session duration");
    return c as unknown as ClusterEntry;
  });

  let evaluation: Evaluation | undefined;
  if (doc.evaluation !== undefined && doc.evaluation !== null) {
    const path = "evaluation";
    req(typeof doc.evaluation === "object", path, "must be an object");
    const ev = doc.evaluation as Record<string, unknown>;
    for (const key of ["tp", "fp"]) {
      req(Array.isArray(ev[key]), `${path}.${key}`, "must be an array");
      for (const [i, v] of (ev[key] as unknown[]).entries()) {
        req(isNum(v) && (v as number) >= 0 && (v as number) < clusters.length,
          `${path}.${key}[${i}]`, "must index a cluster");
      }
    }
    req(Array.isArray(ev.fn), `${path}.fn`, "must be an array");
    evaluation = ev as unknown as Evaluation;
  }

  return {
    schema: SCHEMA,
    session: session as unknown as SessionInfo,
    parameters: (doc.parameters ?? {}) as Record<string, unknown>,
    clusters,
    evaluation,
  };
}
