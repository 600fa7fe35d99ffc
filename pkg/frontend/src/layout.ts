/** Pure scene-graph layout: same (doc, view, options) always gives the same scene. */
import { ActivityMapDoc } from "./types";
import { formatClock } from "./format";

export interface ViewWindow {
  t0: number;
  t1: number;
}

export interface LayoutOptions {
  width: number;
  laneHeight: number;
  showEvaluation: boolean;
}

export interface SceneLane {
  person: string;
  index: number;
  y: number;
  height: number;
}

export type EvalMark = "tp" | "fp" | undefined;

export interface SceneBar {
  clusterIndex: number;
  lane: number;
  x: number;
  width: number;
  y: number;
  height: number;
  mark: EvalMark;
}

export interface SceneTick {
  x: number;
  label: string;
}

export interface SceneFnBand {
  lane: number;
  x: number;
  width: number;
  y: number;
  height: number;
}

export interface Scene {
  width: number;
  height: number;
  lanes: SceneLane[];
  bars: SceneBar[];
  ticks: SceneTick[];
  fnBands: SceneFnBand[];
}

/** Tick spacing: 10-minute marks at full zoom-out, finer steps when zoomed. */
export function tickStep(spanSeconds: number): number {
  const steps = [600, 300, 120, 60, 30, 10, 5, 1];
  for (const step of steps) {
    if (spanSeconds / step >= 4) return step;
  }
  return 1;
}

export const MIN_SPAN_SECONDS = 5;

export function fullView(doc: ActivityMapDoc): ViewWindow {
  return { t0: 0, t1: Math.max(doc.session.duration_seconds, MIN_SPAN_SECONDS) };
}

/** Zoom about a focal time; the window never leaves [0, duration]. */
export function zoomView(view: ViewWindow, focus: number, factor: number,
                         duration: number): ViewWindow {
  const span = Math.min(Math.max((view.t1 - view.t0) * factor, MIN_SPAN_SECONDS),
                        Math.max(duration, MIN_SPAN_SECONDS));
  const rel = (focus - view.t0) / (view.t1 - view.t0);
  let t0 = focus - rel * span;
  t0 = Math.max(0, Math.min(t0, Math.max(duration, MIN_SPAN_SECONDS) - span));
  return { t0, t1: t0 + span };
}

export function panView(view: ViewWindow, dt: number, duration: number): ViewWindow {
  const span = view.t1 - view.t0;
  const limit = Math.max(duration, MIN_SPAN_SECONDS) - span;
  const t0 = Math.max(0, Math.min(view.t0 + dt, limit));
  return { t0, t1: t0 + span };
}

export function layout(doc: ActivityMapDoc, view: ViewWindow, opts: LayoutOptions): Scene {
  const persons = Array.from(new Set<string>([
    ...doc.clusters.map((c) => c.person),
    ...(opts.showEvaluation && doc.evaluation ? doc.evaluation.fn.map((g) => g.person) : []),
  ])).sort();
  const lanes: SceneLane[] = persons.map((person, index) => ({
    person,
    index,
    y: index * opts.laneHeight,
    height: opts.laneHeight,
  }));
  const laneOf = new Map(persons.map((p, i) => [p, i]));
  const span = view.t1 - view.t0;
  const toX = (t: number) => ((t - view.t0) / span) * opts.width;

  const marks = new Map<number, EvalMark>();
  if (opts.showEvaluation && doc.evaluation) {
    for (const i of doc.evaluation.tp) marks.set(i, "tp");
    for (const i of doc.evaluation.fp) marks.set(i, "fp");
  }

  const bars: SceneBar[] = [];
  doc.clusters.forEach((c, clusterIndex) => {
    if (c.t_end <= view.t0 || c.t_start >= view.t1) return;
    const x0 = Math.max(toX(c.t_start), 0);
    const x1 = Math.min(toX(c.t_end), opts.width);
    const lane = laneOf.get(c.person)!;
    bars.push({
      clusterIndex,
      lane,
      x: x0,
      width: Math.max(x1 - x0, 1),
      y: lane * opts.laneHeight + opts.laneHeight * 0.2,
      height: opts.laneHeight * 0.6,
      mark: marks.get(clusterIndex),
    });
  });

  const fnBands: SceneFnBand[] = [];
  if (opts.showEvaluation && doc.evaluation) {
    for (const g of doc.evaluation.fn) {
      if (g.t_end <= view.t0 || g.t_start >= view.t1) continue;
      const lane = laneOf.get(g.person)!;
      const x0 = Math.max(toX(g.t_start), 0);
      const x1 = Math.min(toX(g.t_end), opts.width);
      fnBands.push({
        lane,
        x: x0,
        width: Math.max(x1 - x0, 1),
        y: lane * opts.laneHeight + opts.laneHeight * 0.8,
        height: opts.laneHeight * 0.12,
      });
    }
  }

  const ticks: SceneTick[] = [];
  const step = tickStep(span);
  for (let t = Math.ceil(view.t0 / step) * step; t <= view.t1 + 1e-9; t += step) {
    ticks.push({ x: toX(t), label: formatClock(t) });
  }

  return {
    width: opts.width,
    height: Math.max(lanes.length, 1) * opts.laneHeight,
    lanes,
    bars,
    ticks,
    fnBands,
  };
}
