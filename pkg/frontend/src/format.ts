import { ClusterEntry } from "./types";

/** Whole-session clock as mm:ss; minutes keep counting past the hour. */
export function formatClock(seconds: number): string {
  const total = Math.floor(seconds);
  const m = Math.floor(total / 60);
  const s = total % 60;
  return `${String(m).padStart(2, "0")}:${String(s).padStart(2, "0")}`;
}

export function formatInterval(t0: number, t1: number): string {
  return `${formatClock(t0)}–${formatClock(t1)}`;
}

/** Tooltip body: person, kind, interval, mean probability. */
export function tooltipText(cluster: ClusterEntry): string {
  return [
    `${cluster.person} · ${cluster.kind}`,
    formatInterval(cluster.t_start, cluster.t_end),
    `mean p ${cluster.p_mean.toFixed(3)} (${cluster.n} segment${cluster.n === 1 ? "" : "s"})`,
  ].join("\n");
}
