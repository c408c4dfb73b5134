// Browser shell: create/join a session, keep the role view fresh, apply
// actions from the rendered controls. One WebSocket per open view; events are
// applied strictly in index order via EventBuffer.

import { ApiClient, type WebSocketLike } from "./api.js";
import { EventBuffer } from "./events.js";
import {
  renderHunterView,
  renderQmazeView,
  renderRbjView,
  renderSearchView,
} from "./render.js";
import type {
  Activity,
  FrontierPayload,
  HunterViewPayload,
  QmazePlayerPayload,
  QmazeStep,
  RbjPlayerPayload,
  RbjSolution,
  SearchAlgorithmPayload,
} from "./types.js";

const PLAY_ROLE: Record<Activity, string> = {
  search: "algorithm",
  rbj: "player",
  qmaze: "player",
  twospies: "hunter",
};

const SCENARIOS: Record<Activity, string> = {
  search: "house.search",
  rbj: "red_black_default.deck",
  qmaze: "grid3x3",
  twospies: "country_a.map",
};

interface Mount {
  root: HTMLElement;
  client: ApiClient;
}

export function startApp(root: HTMLElement, baseUrl = ""): void {
  const client = new ApiClient(baseUrl || window.location.origin, (url) => {
    const socket = new WebSocket(url);
    const wrapper: WebSocketLike = {
      onmessage: null,
      onclose: null,
      close: () => socket.close(),
    };
    socket.onmessage = (ev) => wrapper.onmessage?.({ data: ev.data });
    socket.onclose = () => wrapper.onclose?.();
    return wrapper;
  });
  const mount: Mount = { root, client };
  root.innerHTML = `
    <h1>ai-lab</h1>
    <p>Pick an activity; a fresh seeded session starts on the server.</p>
    <nav class="activities">
      <button data-activity="search">Becoming Search</button>
      <button data-activity="rbj">Red and Black Jack</button>
      <button data-activity="qmaze">Q-Maze</button>
      <button data-activity="twospies">Two Spies</button>
    </nav>
    <label><input type="checkbox" id="overlay-toggle"> show solver overlay (rbj)</label>
    <main id="stage"></main>`;
  root.querySelectorAll<HTMLButtonElement>("button[data-activity]").forEach((button) => {
    button.onclick = () => {
      void openSession(mount, button.dataset.activity as Activity);
    };
  });
}

async function openSession(mount: Mount, activity: Activity): Promise<void> {
  const stage = mount.root.querySelector<HTMLElement>("#stage");
  if (!stage) return;
  const created = await mount.client.createSession(activity, SCENARIOS[activity]);
  const role = PLAY_ROLE[activity];
  let lastIndex = 0;
  let solution: RbjSolution | undefined;
  let gamesPlayed = 0;
  let lastStep: QmazeStep | undefined;

  const refresh = async () => {
    const view = await mount.client.getView(created.id, role);
    lastIndex = view.last_index;
    stage.innerHTML = renderStage(activity, view.payload, solution, gamesPlayed, lastStep);
    wireControls();
  };

  const wireControls = () => {
    stage.querySelectorAll<HTMLButtonElement>("button[data-action]").forEach((button) => {
      button.onclick = async () => {
        const action: Record<string, unknown> = { type: button.dataset.action };
        if (button.dataset.to) action.to = button.dataset.to;
        try {
          const response = await mount.client.postAction(created.id, role, lastIndex, action);
          lastIndex = response.last_index;
          if (activity === "twospies" && response.status !== "running") {
            gamesPlayed += 1;
          }
        } finally {
          await refresh();
        }
      };
    });
  };

  const overlayToggle = mount.root.querySelector<HTMLInputElement>("#overlay-toggle");
  if (overlayToggle && activity === "rbj") {
    overlayToggle.onchange = async () => {
      solution = overlayToggle.checked
        ? await mount.client.getSolution(created.id)
        : undefined;
      await refresh();
    };
  }

  const buffer = new EventBuffer((event) => {
    if (event.type === "q_step") {
      lastStep = event.payload as unknown as QmazeStep;
    }
    void refresh();
  });
  mount.client.openEvents(created.id, role, (event) => buffer.push(event));
  await refresh();
}

function renderStage(
  activity: Activity,
  payload: unknown,
  solution: RbjSolution | undefined,
  gamesPlayed: number,
  lastStep: QmazeStep | undefined,
): string {
  switch (activity) {
    case "twospies": {
      const html = renderHunterView(payload as HunterViewPayload);
      const swapNote =
        gamesPlayed > 0 && gamesPlayed % 3 === 0
          ? `<p class="swap-note">three games played - time to swap roles</p>`
          : "";
      return html + swapNote;
    }
    case "rbj":
      return renderRbjView(payload as RbjPlayerPayload, solution);
    case "qmaze":
      return renderQmazeView(payload as QmazePlayerPayload, lastStep);
    case "search":
      return renderSearchView(
        payload as SearchAlgorithmPayload,
        undefined as FrontierPayload | undefined,
      );
  }
}
