/** Console session state: a pure view over the last server payloads plus
 * local interaction flags.
 *
 * The controller owns the only mutable state on the page. Every screen is
 * computed by view() from (last payloads, flags), so replaying the same
 * payloads and interactions always yields the same UI. Choice submission
 * is exactly-once: the in-flight flag flips synchronously on the first
 * accepted click, later clicks are ignored until the server acknowledges,
 * and a transport failure parks the choice behind an explicit retry
 * affordance instead of auto-resubmitting.
 */

import {
  Choice,
  ElicitationApi,
  NetworkError,
  PendingQuery,
  ServiceError,
  SessionCard,
  SurfacePayload,
} from "./api.js";
import { buildHeatmap, GridShapeError, HeatmapModel } from "./heatmap.js";
import { MalformedPayloadError, QueryScene, renderQuery } from "./shots.js";

export type Status = "loading" | "awaiting_choice" | "complete" | "error";

export interface HistoryEntry {
  /** how many answers had been given before this one */
  asked: number;
  choice: Choice;
  firstIndex: number;
  secondIndex: number;
}

export interface ViewState {
  status: Status;
  session: SessionCard | null;
  query: PendingQuery | null;
  scene: QueryScene | null;
  surface: HeatmapModel | null;
  progress: { asked: number; budget: number } | null;
  banner: string | null;
  /** set when a submission failed in transit and can be retried */
  retry: { choice: Choice } | null;
  history: readonly HistoryEntry[];
}

export type ChooseOutcome =
  | "accepted"
  | "ignored"
  | "retry_available"
  | "conflict"
  | "rejected";

interface LastPayloads {
  session: SessionCard | null;
  query: PendingQuery | null;
  surface: SurfacePayload | null;
  surfaceUnavailable: boolean;
}

interface Flags {
  inFlight: boolean;
  pendingChoice: Choice | null;
  banner: string | null;
  fatal: boolean;
}

export class ConsoleSession {
  private last: LastPayloads = {
    session: null,
    query: null,
    surface: null,
    surfaceUnavailable: false,
  };
  private flags: Flags = {
    inFlight: false,
    pendingChoice: null,
    banner: null,
    fatal: false,
  };
  private history: HistoryEntry[] = [];
  private listeners: Array<(v: ViewState) => void> = [];

  constructor(
    private readonly client: ElicitationApi,
    readonly surfaceGrid = 33,
  ) {}

  onChange(fn: (v: ViewState) => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    const v = this.view();
    for (const fn of this.listeners) fn(v);
  }

  /** The whole UI, derived from stored payloads and flags alone.
   *
   * Payloads are validated at ingestion (refresh), so everything stored
   * here renders; a malformed reply never replaces the last good one.
   */
  view(): ViewState {
    const { session, query, surface } = this.last;
    const f = this.flags;

    const scene: QueryScene | null = query === null ? null : renderQuery(query);
    const heatmap: HeatmapModel | null =
      surface === null ? null : buildHeatmap(surface);

    let status: Status;
    if (f.fatal) {
      status = "error";
    } else if (session?.status === "complete") {
      status = "complete";
    } else if (query !== null && !f.inFlight) {
      status = "awaiting_choice";
    } else {
      status = "loading";
    }

    return {
      status,
      session,
      query: status === "awaiting_choice" ? query : null,
      scene: status === "awaiting_choice" ? scene : null,
      surface: heatmap,
      progress: session
        ? { asked: session.asked, budget: session.budget }
        : null,
      banner: f.banner,
      retry:
        !f.inFlight && f.pendingChoice !== null
          ? { choice: f.pendingChoice }
          : null,
      history: this.history,
    };
  }

  async start(req: Parameters<ElicitationApi["createSession"]>[0] = {}): Promise<void> {
    await this.bootstrap(() => this.client.createSession(req));
  }

  /** Attach to an existing session (e.g. after a page reload). */
  async attach(id: string): Promise<void> {
    await this.bootstrap(() => this.client.session(id));
  }

  private async bootstrap(fetchCard: () => Promise<SessionCard>): Promise<void> {
    try {
      this.last.session = await fetchCard();
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
    this.notify();
  }

  /** Submit the human's preference for the pending query. */
  async choose(choice: Choice): Promise<ChooseOutcome> {
    const before = this.view();
    if (before.status !== "awaiting_choice" || this.flags.pendingChoice !== null) {
      return "ignored"; // double clicks and clicks while loading do nothing
    }
    const answered = this.last.query!;
    this.flags.inFlight = true;
    this.flags.pendingChoice = choice;
    this.flags.banner = null;
    this.notify();
    return this.deliver(answered, choice);
  }

  /** Re-send a submission that failed in transit, unchanged. */
  async retry(): Promise<ChooseOutcome> {
    const v = this.view();
    if (v.retry === null || this.last.query === null) return "ignored";
    this.flags.inFlight = true;
    this.notify();
    return this.deliver(this.last.query, v.retry.choice);
  }

  private async deliver(
    answered: PendingQuery,
    choice: Choice,
  ): Promise<ChooseOutcome> {
    try {
      this.last.session = await this.client.respond(
        this.last.session!.id,
        choice,
      );
    } catch (err) {
      if (err instanceof NetworkError) {
        // choice stays parked in pendingChoice for the retry affordance
        this.flags.inFlight = false;
        this.flags.banner = "submission did not reach the service; retry when ready";
        this.notify();
        return "retry_available";
      }
      if (err instanceof ServiceError && err.status === 409) {
        // the answer already landed (or the query expired): surface it and
        // resync rather than inventing a second response
        this.flags.inFlight = false;
        this.flags.pendingChoice = null;
        this.flags.banner = `service reports a conflict: ${err.message}`;
        await this.resync();
        this.notify();
        return "conflict";
      }
      this.fail(err);
      this.notify();
      return "rejected";
    }
    this.history.push({
      asked: answered.asked,
      choice,
      firstIndex: answered.first.index,
      secondIndex: answered.second.index,
    });
    this.flags.pendingChoice = null;
    try {
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
    this.flags.inFlight = false;
    this.notify();
    return "accepted";
  }

  /** Pull the pending query and current surface for the session.
   *
   * A payload that fails validation raises the banner and leaves the last
   * good payload in place, so the screen never swaps to garbage.
   */
  private async refresh(): Promise<void> {
    const id = this.last.session!.id;
    const q = await this.client.query(id);
    if (q.status === "complete") {
      this.last.query = null;
      this.last.session = await this.client.session(id);
    } else {
      try {
        renderQuery(q);
        this.last.query = q;
      } catch (err) {
        if (err instanceof MalformedPayloadError) {
          this.flags.banner = err.message;
        } else {
          throw err;
        }
      }
    }
    if (!this.last.surfaceUnavailable) {
      try {
        const s = await this.client.surface(id, this.surfaceGrid);
        buildHeatmap(s);
        this.last.surface = s;
      } catch (err) {
        if (err instanceof ServiceError && err.code === "unsupported") {
          this.last.surfaceUnavailable = true; // >2 features: no surface view
        } else if (err instanceof GridShapeError) {
          this.flags.banner = err.message;
        } else {
          throw err;
        }
      }
    }
  }

  private async resync(): Promise<void> {
    try {
      this.last.session = await this.client.session(this.last.session!.id);
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  private fail(err: unknown): void {
    this.flags.fatal = true;
    this.flags.inFlight = false;
    this.flags.banner = err instanceof Error ? err.message : String(err);
  }
}
