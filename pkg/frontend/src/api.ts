// Thin typed client for the session service. All randomness and inference
// happen server-side; this module only moves JSON.

import type {
  ActionResponse,
  Activity,
  CreateSessionResponse,
  EventMessage,
  RbjSolution,
  RoleView,
  ServiceError,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ServiceError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

// WebSocket constructor shape; the browser passes window.WebSocket, node tests
// pass the "ws" package's class.
export type WebSocketLike = {
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  close(): void;
};
export type WebSocketFactory = (url: string) => WebSocketLike;

async function parseOrThrow<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body as ServiceError);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly makeSocket?: WebSocketFactory,
  ) {}

  async createSession(
    activity: Activity,
    scenarioName: string,
    seed?: number,
    options?: Record<string, unknown>,
  ): Promise<CreateSessionResponse> {
    const response = await fetch(`${this.baseUrl}/v1/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        activity,
        scenario_name: scenarioName,
        seed: seed ?? null,
        options: options ?? {},
      }),
    });
    return parseOrThrow(response);
  }

  async getView<P>(sessionId: string, role: string): Promise<RoleView<P>> {
    const response = await fetch(
      `${this.baseUrl}/v1/sessions/${sessionId}/view?role=${encodeURIComponent(role)}`,
    );
    return parseOrThrow(response);
  }

  async postAction(
    sessionId: string,
    role: string,
    expectedIndex: number,
    action: Record<string, unknown>,
  ): Promise<ActionResponse> {
    const response = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ role, expected_index: expectedIndex, action }),
    });
    return parseOrThrow(response);
  }

  async getSolution(sessionId: string): Promise<RbjSolution> {
    const response = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/solution`);
    return parseOrThrow(response);
  }

  openEvents(
    sessionId: string,
    role: string,
    onEvent: (event: EventMessage) => void,
    cursor = 0,
  ): WebSocketLike {
    if (!this.makeSocket) {
      throw new Error("no WebSocket factory configured");
    }
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    const socket = this.makeSocket(
      `${wsBase}/v1/sessions/${sessionId}/events?role=${encodeURIComponent(role)}&cursor=${cursor}`,
    );
    socket.onmessage = (event) => {
      onEvent(JSON.parse(String(event.data)) as EventMessage);
    };
    return socket;
  }
}
