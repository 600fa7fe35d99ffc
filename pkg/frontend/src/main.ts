/** Page bootstrap: pick the document from ?doc=, wire the toolbar. */
import { ActivityMapViewer } from "./viewer";

export function boot(root: HTMLElement = document.body): ActivityMapViewer {
  const toolbar = document.createElement("div");
  toolbar.className = "actmap-toolbar";
  const container = document.createElement("div");
  root.append(toolbar, container);
  const viewer = new ActivityMapViewer({ container });

  const button = (label: string, onClick: () => void) => {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", onClick);
    toolbar.appendChild(b);
    return b;
  };
  button("zoom in", () => viewer.zoom(0.5));
  button("zoom out", () => viewer.zoom(2.0));
  button("reset", () => viewer.resetView());
  button("TP/FP/FN overlay", () => viewer.toggleEvaluation());

  const params = new URLSearchParams(window.location.search);
  const docUrl = params.get("doc") ?? "actmap.json";
  void viewer.loadUrl(docUrl);
  return viewer;
}

if (typeof window !== "undefined" && !("__ACTMAP_TEST__" in window)) {
  window.addEventListener("DOMContentLoaded", () => boot());
}
