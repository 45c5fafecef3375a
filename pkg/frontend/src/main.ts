/** Page bootstrap and DOM wiring for the elicitation console.
 *
 * One session per page. The DOM is rebuilt from ViewState on every change
 * (the state object is the single source of truth); the only inputs are
 * clicks on the two shot cards, the 1/2 keys, and the retry button.
 */

import { Choice, ElicitationApi, ServiceClient, resolveBaseUrl } from "./api.js";
import { legendFor, paintHeatmap, paintScene, Painter2D } from "./draw.js";
import { SHOT_COLORS } from "./shots.js";
import { ConsoleSession, ViewState } from "./state.js";

export interface MountOptions {
  /** override context creation so tests can record draw commands */
  makeContext?: (canvas: HTMLCanvasElement) => Painter2D | null;
  surfaceGrid?: number;
}

export interface MountedConsole {
  session: ConsoleSession;
  root: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mountConsole(
  root: HTMLElement,
  client: ElicitationApi,
  opts: MountOptions = {},
): MountedConsole {
  const doc = root.ownerDocument;
  const session = new ConsoleSession(client, opts.surfaceGrid ?? 33);
  const makeContext =
    opts.makeContext ??
    ((canvas: HTMLCanvasElement) =>
      canvas.getContext("2d") as Painter2D | null);

  const header = el(doc, "div", "console-header");
  const banner = el(doc, "div", "console-banner");
  const prompt = el(doc, "div", "console-prompt");
  const courseCanvas = el(doc, "canvas", "course-view");
  courseCanvas.width = 420;
  courseCanvas.height = 420;
  const buttons = el(doc, "div", "choice-buttons");
  const firstBtn = el(doc, "button", "choose-first", "shot 1 (blue)");
  firstBtn.style.borderColor = SHOT_COLORS.first;
  const secondBtn = el(doc, "button", "choose-second", "shot 2 (green)");
  secondBtn.style.borderColor = SHOT_COLORS.second;
  const retryBtn = el(doc, "button", "retry-submit", "retry submission");
  buttons.append(firstBtn, secondBtn, retryBtn);
  const heatCanvas = el(doc, "canvas", "reward-heatmap");
  heatCanvas.width = 360;
  heatCanvas.height = 400;
  const legendBox = el(doc, "div", "heatmap-legend");
  const historyBox = el(doc, "ol", "history-replay");
  root.replaceChildren(
    header,
    banner,
    prompt,
    courseCanvas,
    buttons,
    heatCanvas,
    legendBox,
    historyBox,
  );

  const choose = (choice: Choice) => void session.choose(choice);
  firstBtn.addEventListener("click", () => choose("first"));
  secondBtn.addEventListener("click", () => choose("second"));
  courseCanvas.addEventListener("click", (ev) => {
    // left half of the course picks the blue shot, right half the green
    const rect = courseCanvas.getBoundingClientRect();
    const x = ev.clientX - rect.left;
    choose(x < rect.width / 2 ? "first" : "second");
  });
  retryBtn.addEventListener("click", () => void session.retry());
  doc.addEventListener("keydown", (ev) => {
    if (ev.key === "1") choose("first");
    else if (ev.key === "2") choose("second");
  });

  const render = (v: ViewState) => {
    header.textContent = v.progress
      ? `answered ${v.progress.asked} of ${v.progress.budget}`
      : "connecting";
    banner.textContent = v.banner ?? "";
    banner.style.display = v.banner ? "block" : "none";

    if (v.status === "awaiting_choice") {
      prompt.textContent = "which shot do you prefer? click a card or press 1 / 2";
    } else if (v.status === "complete") {
      prompt.textContent = "session complete; final learned reward below";
    } else if (v.status === "error") {
      prompt.textContent = "session failed";
    } else {
      prompt.textContent = "working";
    }

    firstBtn.disabled = v.status !== "awaiting_choice";
    secondBtn.disabled = v.status !== "awaiting_choice";
    retryBtn.style.display = v.retry ? "inline-block" : "none";

    const courseCtx = makeContext(courseCanvas);
    if (courseCtx && v.scene) {
      paintScene(courseCtx, v.scene, {
        width: courseCanvas.width,
        height: courseCanvas.height,
      });
    }

    const heatCtx = makeContext(heatCanvas);
    if (heatCtx && v.surface) {
      paintHeatmap(heatCtx, v.surface, {
        width: heatCanvas.width,
        height: heatCanvas.height,
      });
    }
    if (v.surface) {
      const legend = legendFor(v.surface);
      legendBox.replaceChildren(
        el(doc, "span", "legend-lo", legend.lo.toPrecision(3)),
        ...legend.stops.map((s) => {
          const chip = el(doc, "span", "legend-chip");
          chip.style.background = s.color;
          return chip;
        }),
        el(doc, "span", "legend-hi", legend.hi.toPrecision(3)),
      );
    }

    if (v.status === "complete") {
      historyBox.replaceChildren(
        ...v.history.map((h) =>
          el(
            doc,
            "li",
            "history-entry",
            `query ${h.asked + 1}: chose ${h.choice} ` +
              `(candidates ${h.firstIndex} vs ${h.secondIndex})`,
          ),
        ),
      );
    } else {
      historyBox.replaceChildren();
    }
  };

  session.onChange(render);
  render(session.view());
  return { session, root };
}

/** Entry point for the real page; tests import mountConsole directly. */
export function boot(win: Window & { PREFGP_SERVICE?: unknown }): void {
  const doc = win.document;
  const root = doc.getElementById("app");
  if (!root) return;
  const base = resolveBaseUrl(
    win.location.search,
    win,
    win.location.origin,
  );
  const params = new URLSearchParams(win.location.search);
  const client = new ServiceClient(base);
  const mounted = mountConsole(root, client);
  const existing = params.get("session");
  if (existing) {
    void mounted.session.attach(existing);
  } else {
    const req: Record<string, number | string> = {};
    const env = params.get("env");
    if (env) req["env"] = env;
    for (const key of ["seed", "budget", "pool_size"] as const) {
      const raw = params.get(key);
      if (raw !== null) req[key] = Number(raw);
    }
    void mounted.session.start(req);
  }
}

declare const window: (Window & { PREFGP_SERVICE?: unknown }) | undefined;
if (typeof window !== "undefined" && window.document.getElementById("app")) {
  boot(window);
}
