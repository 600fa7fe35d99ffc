import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { describe, expect, it } from "vitest";

import { DocValidationError, parseDoc } from "../src/types";

const golden = JSON.parse(
  readFileSync(resolve(process.cwd(), "../tests/data/golden_actmap.json"), "utf8"),
);

describe("parseDoc", () => {
  it("accepts the golden engine output", () => {
    const doc = parseDoc(golden);
    expect(doc.session.id).toBe("synthetic-S1");
    expect(doc.clusters).toHaveLength(4);
    expect(doc.evaluation?.tp).toEqual([0]);
  });

  it("rejects a wrong schema version with a field message", () => {
    const bad = { ...golden, schema: "actmap/2" };
    expect(() => parseDoc(bad)).toThrowError(DocValidationError);
    try {
      parseDoc(bad);
    } catch (err) {
      expect((err as DocValidationError).field).toBe("schema");
      expect((err as DocValidationError).message).toContain("actmap/1");
    }
  });

  it("names the failing cluster field", () => {
    const bad = JSON.parse(JSON.stringify(golden));
    bad.clusters[1].t_end = bad.clusters[1].t_start; // empty interval
    try {
      parseDoc(bad);
      expect.unreachable();
    } catch (err) {
      expect((err as DocValidationError).field).toBe("clusters[1].t_end");
    }
  });

  it("rejects missing session info", () => {
    const bad = JSON.parse(JSON.stringify(golden));
    delete bad.session.video_url;
    expect(() => parseDoc(bad)).toThrowError(/session.video_url/);
  });

  it("rejects evaluation indices outside the cluster list", () => {
    const bad = JSON.parse(JSON.stringify(golden));
    bad.evaluation.tp = [99];
    expect(() => parseDoc(bad)).toThrowError(/evaluation.tp\[0\]/);
  });

  it("rejects probabilities outside (0,1)", () => {
    const bad = JSON.parse(JSON.stringify(golden));
    bad.clusters[0].p_mean = 1.0;
    expect(() => parseDoc(bad)).toThrowError(/p_mean/);
  });
});
