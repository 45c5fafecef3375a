/** Typed client for the elicitation service JSON API.
 *
 * Mirrors docs/api.md in the service package: every error body is
 * {code, message}; transport failures are distinguished from service
 * rejections so the UI can offer a retry for the former and surface the
 * latter.
 */

export interface SessionCard {
  id: string;
  env: string;
  seed: number;
  budget: number;
  asked: number;
  status: "active" | "complete";
}

export interface Candidate {
  index: number;
  params: Record<string, number>;
  features: Record<string, number>;
}

export interface PendingQuery {
  status: "awaiting_response";
  asked: number;
  budget: number;
  objective: number;
  first: Candidate;
  second: Candidate;
}

export interface CompleteCard {
  status: "complete";
  asked: number;
  budget: number;
}

export type QueryPayload = PendingQuery | CompleteCard;

export interface Axis {
  name: string;
  lo: number;
  hi: number;
}

export interface SurfacePayload {
  grid: number;
  mean: number[][];
  std: number[][];
  axes: Axis[];
}

export interface NewSessionRequest {
  env?: string;
  seed?: number;
  budget?: number;
  pool_size?: number;
  sigma?: number;
  theta?: number;
}

export type Choice = "first" | "second";

/** The service answered with an error body ({code, message}). */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

/** The request never reached the service (or the reply was lost). */
export class NetworkError extends Error {
  constructor(message: string, cause?: unknown) {
    super(message, { cause });
    this.name = "NetworkError";
  }
}

/** What the console needs from the service; ServiceClient is the real
 * HTTP implementation, tests substitute fakes. */
export interface ElicitationApi {
  createSession(req?: NewSessionRequest): Promise<SessionCard>;
  session(id: string): Promise<SessionCard>;
  query(id: string): Promise<QueryPayload>;
  respond(id: string, choice: Choice): Promise<SessionCard>;
  surface(id: string, grid?: number): Promise<SurfacePayload>;
}

export class ServiceClient implements ElicitationApi {
  constructor(readonly baseUrl: string) {}

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createSession(req: NewSessionRequest = {}): Promise<SessionCard> {
    return this.request("POST", "/sessions", req);
  }

  session(id: string): Promise<SessionCard> {
    return this.request("GET", `/sessions/${id}`);
  }

  query(id: string): Promise<QueryPayload> {
    return this.request("GET", `/sessions/${id}/query`);
  }

  respond(id: string, choice: Choice): Promise<SessionCard> {
    return this.request("POST", `/sessions/${id}/response`, { choice });
  }

  surface(id: string, grid?: number): Promise<SurfacePayload> {
    const suffix = grid === undefined ? "" : `?grid=${grid}`;
    return this.request("GET", `/sessions/${id}/surface${suffix}`);
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, {
        method,
        headers:
          body === undefined
            ? undefined
            : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(`cannot reach ${this.baseUrl}`, err);
    }
    const text = await resp.text();
    let payload: unknown;
    try {
      payload = JSON.parse(text);
    } catch {
      throw new NetworkError(
        `non-JSON reply (${resp.status}) from ${this.baseUrl + path}`,
      );
    }
    if (!resp.ok) {
      const e = payload as { code?: string; message?: string };
      throw new ServiceError(
        resp.status,
        e.code ?? "unknown",
        e.message ?? text,
      );
    }
    return payload as T;
  }
}

/** Service base URL, configurable at page load.
 *
 * Priority: explicit ?service=... query parameter, then a global set by
 * the embedding page (window.PREFGP_SERVICE), then same-origin.
 */
export function resolveBaseUrl(
  search: string,
  globals: { PREFGP_SERVICE?: unknown },
  origin: string,
): string {
  const fromQuery = new URLSearchParams(search).get("service");
  if (fromQuery) return fromQuery.replace(/\/+$/, "");
  const fromGlobal = globals.PREFGP_SERVICE;
  if (typeof fromGlobal === "string" && fromGlobal.length > 0) {
    return fromGlobal.replace(/\/+$/, "");
  }
  return origin;
}
