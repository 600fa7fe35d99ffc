/** Interactive activity-map viewer: lanes, zoom/pan, tooltips, deep links. */
import { ActivityMapDoc, DocValidationError, parseDoc } from "./types";
import { Scene, ViewWindow, fullView, layout, panView, zoomView } from "./layout";
import { tooltipText } from "./format";

const SVG_NS = "http://www.w3.org/2000/svg";
const BAR_COLORS: Record<string, string> = {
  default: "#4878b0",
  tp: "#3a9e4f",
  fp: "#d8b53c",
};
const AXIS_HEIGHT = 24;
const LABEL_WIDTH = 110;

export interface ViewerOptions {
  container: HTMLElement;
  width?: number;
  laneHeight?: number;
  /** Navigation hook; defaults to window.open. Tests inject a recorder. */
  navigate?: (url: string) => void;
}

export class ActivityMapViewer {
  readonly container: HTMLElement;
  readonly interactionLog: string[] = [];
  doc: ActivityMapDoc | null = null;
  view: ViewWindow = { t0: 0, t1: 1 };
  showEvaluation = false;
  selected = new Set<number>();
  hovered: number | null = null;

  private width: number;
  private laneHeight: number;
  private navigate: (url: string) => void;
  private tooltip: HTMLDivElement;
  private message: HTMLDivElement;
  private stage: HTMLDivElement;
  private dragFrom: number | null = null;

  constructor(opts: ViewerOptions) {
    this.container = opts.container;
    this.width = opts.width ?? 960;
    this.laneHeight = opts.laneHeight ?? 48;
    this.navigate = opts.navigate ?? ((url) => window.open(url, "_blank"));
    this.container.classList.add("actmap-viewer");
    this.message = document.createElement("div");
    this.message.className = "actmap-message";
    this.stage = document.createElement("div");
    this.stage.className = "actmap-stage";
    this.tooltip = document.createElement("div");
    this.tooltip.className = "actmap-tooltip";
    this.tooltip.style.display = "none";
    this.container.append(this.message, this.stage, this.tooltip);
  }

  /** Parse + render an untyped payload; validation problems become messages. */
  loadDoc(raw: unknown): void {
    try {
      this.doc = parseDoc(raw);
    } catch (err) {
      this.doc = null;
      this.stage.replaceChildren();
      if (err instanceof DocValidationError) {
        this.showMessage(`Cannot load document: field ${err.field} is invalid (${err.message})`);
        return;
      }
      throw err;
    }
    this.view = fullView(this.doc);
    this.showMessage("");
    this.render();
  }

  async loadUrl(url: string): Promise<void> {
    this.showMessage("Loading…");
    try {
      const resp = await fetch(url);
      if (!resp.ok) {
        this.showMessage(`Cannot fetch ${url}: HTTP ${resp.status}`);
        return;
      }
      this.loadDoc(await resp.json());
    } catch (err) {
      this.showMessage(`Cannot fetch ${url}: ${String(err)}`);
    }
  }

  showMessage(text: string): void {
    this.message.textContent = text;
    this.message.style.display = text ? "block" : "none";
  }

  toggleEvaluation(): void {
    this.showEvaluation = !this.showEvaluation;
    this.render();
  }

  zoom(factor: number, focus?: number): void {
    if (!this.doc) return;
    const mid = focus ?? (this.view.t0 + this.view.t1) / 2;
    this.view = zoomView(this.view, mid, factor, this.doc.session.duration_seconds);
    this.interactionLog.push(`zoom ${factor} @ ${mid.toFixed(1)}`);
    this.render();
  }

  pan(dt: number): void {
    if (!this.doc) return;
    this.view = panView(this.view, dt, this.doc.session.duration_seconds);
    this.render();
  }

  resetView(): void {
    if (!this.doc) return;
    this.view = fullView(this.doc);
    this.render();
  }

  scene(): Scene {
    if (!this.doc) throw new Error("no document loaded");
    return layout(this.doc, this.view, {
      width: this.width,
      laneHeight: this.laneHeight,
      showEvaluation: this.showEvaluation,
    });
  }

  private seek(clusterIndex: number): void {
    if (!this.doc) return;
    const link = this.doc.clusters[clusterIndex].link;
    if (!link) return;
    this.interactionLog.push(`seek ${link}`);
    this.navigate(link);
  }

  private hover(clusterIndex: number | null, clientX = 0, clientY = 0): void {
    this.hovered = clusterIndex;
    if (clusterIndex === null || !this.doc) {
      this.tooltip.style.display = "none";
      return;
    }
    this.tooltip.textContent = tooltipText(this.doc.clusters[clusterIndex]);
    this.tooltip.style.display = "block";
    this.tooltip.style.left = `${clientX + 12}px`;
    this.tooltip.style.top = `${clientY + 12}px`;
  }

  render(): void {
    if (!this.doc) return;
    const scene = this.scene();
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", String(LABEL_WIDTH + scene.width));
    svg.setAttribute("height", String(scene.height + AXIS_HEIGHT));
    svg.setAttribute("data-testid", "actmap-svg");

    for (const lane of scene.lanes) {
      const row = document.createElementNS(SVG_NS, "rect");
      row.setAttribute("class", "actmap-lane");
      row.setAttribute("x", String(LABEL_WIDTH));
      row.setAttribute("y", String(lane.y));
      row.setAttribute("width", String(scene.width));
      row.setAttribute("height", String(lane.height));
      row.setAttribute("fill", lane.index % 2 ? "#f4f4f8" : "#ffffff");
      svg.appendChild(row);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("class", "actmap-lane-label");
      label.setAttribute("x", "8");
      label.setAttribute("y", String(lane.y + lane.height / 2 + 4));
      label.textContent = lane.person;
      svg.appendChild(label);
    }

    for (const tick of scene.ticks) {
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("class", "actmap-tick");
      line.setAttribute("x1", String(LABEL_WIDTH + tick.x));
      line.setAttribute("x2", String(LABEL_WIDTH + tick.x));
      line.setAttribute("y1", "0");
      line.setAttribute("y2", String(scene.height));
      line.setAttribute("stroke", "#dddddd");
      svg.appendChild(line);
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("class", "actmap-tick-label");
      text.setAttribute("x", String(LABEL_WIDTH + tick.x + 2));
      text.setAttribute("y", String(scene.height + 16));
      text.textContent = tick.label;
      svg.appendChild(text);
    }

    for (const band of scene.fnBands) {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("class", "actmap-fn");
      rect.setAttribute("x", String(LABEL_WIDTH + band.x));
      rect.setAttribute("y", String(band.y));
      rect.setAttribute("width", String(band.width));
      rect.setAttribute("height", String(band.height));
      rect.setAttribute("fill", "#c43d3d");
      svg.appendChild(rect);
    }

    for (const bar of scene.bars) {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("class", "actmap-bar");
      rect.setAttribute("data-cluster", String(bar.clusterIndex));
      rect.setAttribute("x", String(LABEL_WIDTH + bar.x));
      rect.setAttribute("y", String(bar.y));
      rect.setAttribute("width", String(bar.width));
      rect.setAttribute("height", String(bar.height));
      rect.setAttribute("fill", BAR_COLORS[bar.mark ?? "default"]);
      if (this.selected.has(bar.clusterIndex)) {
        rect.setAttribute("stroke", "#222222");
        rect.setAttribute("stroke-width", "2");
      }
      rect.addEventListener("click", (ev) => {
        this.selected.has(bar.clusterIndex)
          ? this.selected.delete(bar.clusterIndex)
          : this.selected.add(bar.clusterIndex);
        this.seek(bar.clusterIndex);
        ev.stopPropagation();
      });
      rect.addEventListener("mouseenter", (ev) => {
        const m = ev as MouseEvent;
        this.hover(bar.clusterIndex, m.clientX, m.clientY);
      });
      rect.addEventListener("mouseleave", () => this.hover(null));
      svg.appendChild(rect);
    }

    svg.addEventListener("wheel", (ev) => {
      const w = ev as WheelEvent;
      w.preventDefault();
      const span = this.view.t1 - this.view.t0;
      const focus = this.view.t0 + ((w.offsetX - LABEL_WIDTH) / scene.width) * span;
      this.zoom(w.deltaY > 0 ? 1.25 : 0.8, focus);
    });
    svg.addEventListener("mousedown", (ev) => {
      this.dragFrom = (ev as MouseEvent).clientX;
    });
    svg.addEventListener("mousemove", (ev) => {
      if (this.dragFrom === null) return;
      const dx = (ev as MouseEvent).clientX - this.dragFrom;
      this.dragFrom = (ev as MouseEvent).clientX;
      const span = this.view.t1 - this.view.t0;
      this.pan((-dx / scene.width) * span);
    });
    svg.addEventListener("mouseup", () => {
      this.dragFrom = null;
    });

    this.stage.replaceChildren(svg);
  }
}
