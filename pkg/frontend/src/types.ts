// Wire types for the ai-lab session service. The client renders only what
// these payloads carry; it never reconstructs hidden state.

export type Activity = "search" | "rbj" | "qmaze" | "twospies";

export interface CreateSessionResponse {
  id: string;
  seed: number;
}

export interface RoleView<P = Record<string, unknown>> {
  session_id: string;
  activity: Activity;
  role: string;
  last_index: number;
  payload: P;
}

export interface EventMessage {
  index: number;
  type: string;
  payload: Record<string, unknown>;
}

export interface ActionResponse {
  accepted: boolean;
  last_index: number;
  status: string;
  events: EventMessage[];
}

export interface ServiceError {
  code: string;
  message: string;
  detail?: Record<string, unknown>;
}

// -- activity payloads (the fields each role's card grants) --------------------

export interface HunterRound {
  round: number;
  observation: string;
  hunter_action: { type: string; to?: string };
  hunter_city: string;
  capture_result: boolean | null;
}

export interface HunterViewPayload {
  round: number;
  rounds_total: number;
  hunter_city: string;
  status: string;
  belief: Record<string, number>;
  history: HunterRound[];
  map: {
    cities: { id: string; region: string; neighbors: string[] }[];
  };
}

export interface RbjDraw {
  action: string;
  state: number[];
  card: string;
  result: number[] | string;
}

export interface RbjPlayerPayload {
  state: number[];
  status: string;
  legal_actions: string[];
  draws: RbjDraw[];
  terminal?: string;
  score?: number;
}

export interface RbjSolution {
  values: Record<string, number>;
  q_values: Record<string, number>;
  policy: Record<string, string>;
  iterations_to_converge: number;
}

export interface QmazeStep {
  state: number[];
  roll: number;
  explored: boolean;
  action_roll: number | null;
  action: string;
  reward: number;
  next_state: number[];
  q_before: number;
  q_after: number;
}

export interface QmazePlayerPayload {
  episode: number;
  position: number[];
  steps_used: number;
  budget: number;
  episode_done: boolean;
  width: number;
  height: number;
  start: number[];
  q_table: Record<string, number>;
  revealed: { pos: number[]; reward: number; terminal: boolean }[];
  status: string;
}

export interface SearchAlgorithmPayload {
  algo: string;
  discipline: string;
  status: string;
  expansions: number;
  visited: string[];
  parents: Record<string, [string, string]>;
  initial: string;
  result: {
    found: boolean;
    path_states: string[];
    path_actions: string[];
    total_cost: number;
    expansions: number;
  } | null;
}

export interface FrontierPayload {
  algo: string;
  discipline: string;
  status: string;
  expansions: number;
  frontier: { state: string; g: number; key: number | null }[];
}
