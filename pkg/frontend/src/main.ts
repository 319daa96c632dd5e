/** Browser shell: wires pointer/keyboard events to the controller and keeps
 * the canvas painted. All geometry decisions live server-side; this file is
 * presentation only. */

import { StudioApi } from "./api.js";
import { OrbitCamera } from "./camera.js";
import { StudioController } from "./controller.js";
import { buildDrawList, paint } from "./render.js";

type Tool = "orbit" | "spray-green" | "spray-red" | "plane";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");

  const camera = new OrbitCamera();
  camera.target = [0, 0, 0.2];
  camera.distance = 2.5;
  const viewport = { width: canvas.width, height: canvas.height };
  const api = new StudioApi("");
  const controller = new StudioController(api, camera, viewport);

  let tool: Tool = "orbit";
  let zoneCounter = 0;
  let dragging = false;

  const statusLine = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");

  function refresh(): void {
    viewport.width = canvas.width;
    viewport.height = canvas.height;
    const list = buildDrawList(controller.state, camera, viewport);
    paint(ctx!, list, viewport);
    const st = controller.state;
    statusLine.textContent =
      `session ${st.sessionId ?? "-"} | status ${st.status ?? "-"} | ` +
      `points ${st.pointCount} | progress ${(st.progress * 100).toFixed(0)}%` +
      (st.warning ? ` | ${st.warning}` : "");
    banner.className = `banner ${st.banner}`;
    banner.textContent =
      st.banner === "success" ? "placement meets the reach threshold"
      : st.banner === "adjust" ? "below threshold: adjust the search plane and rerun"
      : st.banner === "failed" ? `run failed: ${st.lastError ?? "unknown error"}`
      : "";
    const busy = controller.running;
    for (const id of ["load", "commit", "run", "plane-grow", "plane-shrink"]) {
      el<HTMLButtonElement>(id).disabled = busy;
    }
  }

  el<HTMLButtonElement>("new-session").onclick = async () => {
    await controller.newSession();
    refresh();
  };

  el<HTMLInputElement>("file").onchange = async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    await controller.loadCloud(await file.text());
    refresh();
  };
  el<HTMLButtonElement>("load").onclick = () => el<HTMLInputElement>("file").click();

  for (const [id, t] of [["tool-orbit", "orbit"], ["tool-green", "spray-green"],
                         ["tool-red", "spray-red"], ["tool-plane", "plane"]] as const) {
    el<HTMLButtonElement>(id).onclick = () => {
      tool = t;
    };
  }

  canvas.onpointerdown = (e) => {
    dragging = true;
    if (tool === "spray-green" || tool === "spray-red") {
      zoneCounter += 1;
      const label = tool === "spray-green" ? "interact" : "avoid";
      const prefix = label === "interact" ? "zone" : "obstacle";
      controller.beginStroke(label, `${prefix}-${zoneCounter}`, 0.05);
      controller.spray(e.offsetX, e.offsetY);
    }
  };
  canvas.onpointermove = (e) => {
    if (!dragging) return;
    if (tool === "orbit") {
      camera.orbit(-e.movementX * 0.005, e.movementY * 0.005);
    } else if (tool === "spray-green" || tool === "spray-red") {
      controller.spray(e.offsetX, e.offsetY);
    } else if (tool === "plane" && controller.state.searchspace) {
      void controller.adjustPlane({
        op: "translate",
        offset: [e.movementX * 0.002, -e.movementY * 0.002, 0],
      }).then(refresh);
    }
    refresh();
  };
  canvas.onpointerup = async () => {
    dragging = false;
    if ((tool === "spray-green" || tool === "spray-red") && controller.state.draft) {
      try {
        await controller.commitStroke();
      } catch {
        // error text already captured in state.lastError
      }
      refresh();
    }
  };
  canvas.onwheel = (e) => {
    camera.zoom(e.deltaY > 0 ? 1.1 : 0.9);
    refresh();
    e.preventDefault();
  };

  el<HTMLButtonElement>("place-plane").onclick = () => {
    controller.placePlane([camera.target[0], camera.target[1], 0], 0.25, 0.2);
    refresh();
  };
  el<HTMLButtonElement>("plane-grow").onclick = async () => {
    await controller.adjustPlane({ op: "scale", fx: 1.25, fy: 1.25 });
    refresh();
  };
  el<HTMLButtonElement>("plane-shrink").onclick = async () => {
    await controller.adjustPlane({ op: "scale", fx: 0.8, fy: 0.8 });
    refresh();
  };

  el<HTMLButtonElement>("commit").onclick = async () => {
    try {
      await controller.commitStroke();
    } catch {
      // surfaced via banner/status
    }
    refresh();
  };

  el<HTMLButtonElement>("run").onclick = async () => {
    const ticker = setInterval(refresh, 250);
    try {
      await controller.runAndReview({ robot: "generic6r" });
    } finally {
      clearInterval(ticker);
      refresh();
    }
  };

  refresh();
}

main();
