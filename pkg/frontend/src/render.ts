// Pure view renderers: payload in, HTML string out. Every number shown is
// copied verbatim from the service payload into a data-* attribute, so tests
// (and disputes) can trace each rendered value back to the wire.

import type {
  FrontierPayload,
  HunterViewPayload,
  QmazePlayerPayload,
  QmazeStep,
  RbjPlayerPayload,
  RbjSolution,
  SearchAlgorithmPayload,
} from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function heatColor(p: number): string {
  const alpha = Math.min(1, Math.max(0, p));
  return `rgba(180, 40, 40, ${alpha.toFixed(3)})`;
}

export function renderHunterView(payload: HunterViewPayload): string {
  const cities = payload.map.cities;
  const cells = cities
    .map((city) => {
      const p = payload.belief[city.id];
      return (
        `<div class="belief-cell" data-city="${escapeHtml(city.id)}" data-p="${p}"` +
        ` style="background:${heatColor(p)}">` +
        `<span class="city">${escapeHtml(city.id)}</span>` +
        `<span class="region">${escapeHtml(city.region)}</span>` +
        `<span class="prob">${p.toFixed(3)}</span></div>`
      );
    })
    .join("");
  const rounds = payload.history
    .map((record) => {
      const capture =
        record.capture_result === null
          ? ""
          : record.capture_result
            ? " capture succeeded"
            : " capture failed";
      return (
        `<li data-round="${record.round}" data-observation="${escapeHtml(record.observation)}">` +
        `round ${record.round}: report from the ${escapeHtml(record.observation)}` +
        `${capture}</li>`
      );
    })
    .join("");
  const neighbors =
    cities.find((c) => c.id === payload.hunter_city)?.neighbors ?? [];
  const moves = neighbors
    .map(
      (city) =>
        `<button class="move" data-action="move" data-to="${escapeHtml(city)}">move to ${escapeHtml(city)}</button>`,
    )
    .join("");
  return (
    `<section class="twospies" data-status="${escapeHtml(payload.status)}" ` +
    `data-round="${payload.round}" data-rounds-total="${payload.rounds_total}">` +
    `<header>round ${payload.round}/${payload.rounds_total} - you are at ` +
    `<b data-hunter-city="${escapeHtml(payload.hunter_city)}">${escapeHtml(payload.hunter_city)}</b>` +
    ` - ${escapeHtml(payload.status)}</header>` +
    `<div class="belief-heatmap">${cells}</div>` +
    `<ol class="observations">${rounds}</ol>` +
    `<nav class="controls">${moves}` +
    `<button data-action="stay">stay</button>` +
    `<button data-action="capture">capture</button></nav>` +
    `</section>`
  );
}

export function renderRbjView(payload: RbjPlayerPayload, solution?: RbjSolution): string {
  const [r, b] = payload.state;
  const draws = payload.draws
    .map((draw, i) => {
      const result = Array.isArray(draw.result) ? `(${draw.result.join(",")})` : draw.result;
      return (
        `<li data-draw="${i}" data-card="${escapeHtml(draw.card)}">` +
        `${escapeHtml(draw.action)}: drew ${escapeHtml(draw.card)} -> ${escapeHtml(result)}</li>`
      );
    })
    .join("");
  const buttons = payload.legal_actions
    .map((a) => `<button data-action="${escapeHtml(a)}">${escapeHtml(a)}</button>`)
    .join("");
  const score =
    payload.score === undefined
      ? ""
      : `<p class="score" data-terminal="${escapeHtml(payload.terminal ?? "")}" ` +
        `data-score="${payload.score}">result: ${escapeHtml(payload.terminal ?? "")} ` +
        `(${payload.score} points)</p>`;
  let overlay = "";
  if (solution) {
    const key = `(${r},${b})`;
    const qHit = solution.q_values[`${key}:Hit`];
    const qStand = solution.q_values[`${key}:Stand`];
    if (qHit !== undefined && qStand !== undefined) {
      overlay =
        `<aside class="overlay" data-q-hit="${qHit}" data-q-stand="${qStand}">` +
        `solver: Q(hit)=${qHit} Q(stand)=${qStand}</aside>`;
    }
  }
  return (
    `<section class="rbj" data-status="${escapeHtml(payload.status)}" ` +
    `data-red="${r}" data-black="${b}">` +
    `<header>hand: ${r} red, ${b} black</header>` +
    `<ol class="draws">${draws}</ol>` +
    `<nav class="controls">${buttons}</nav>` +
    `${overlay}${score}</section>`
  );
}

export function renderQmazeView(payload: QmazePlayerPayload, lastStep?: QmazeStep): string {
  const revealedByPos = new Map(
    payload.revealed.map((cell) => [`${cell.pos[0]},${cell.pos[1]}`, cell]),
  );
  const rows: string[] = [];
  for (let y = 0; y < payload.height; y += 1) {
    const cells: string[] = [];
    for (let x = 0; x < payload.width; x += 1) {
      const key = `${x},${y}`;
      const revealed = revealedByPos.get(key);
      const here = payload.position[0] === x && payload.position[1] === y;
      const qEntries = ["N", "E", "S", "W"]
        .map((a) => {
          const q = payload.q_table[`(${x},${y}):${a}`];
          if (q === undefined) return "";
          return `<span class="q" data-cell="${key}" data-q-action="${a}" data-q="${q}">${a}:${q.toFixed(2)}</span>`;
        })
        .join("");
      const reward = revealed
        ? `<span class="reward" data-cell="${key}" data-reward="${revealed.reward}">${revealed.reward}</span>`
        : `<span class="reward hidden-reward">?</span>`;
      cells.push(
        `<td class="cell${here ? " here" : ""}${revealed?.terminal ? " terminal" : ""}" ` +
          `data-cell="${key}">${reward}${qEntries}</td>`,
      );
    }
    rows.push(`<tr>${cells.join("")}</tr>`);
  }
  // every number in the step panel is echoed from the service event payload;
  // the equation is displayed, never recomputed client-side
  const stepPanel = lastStep
    ? `<aside class="last-step" data-roll="${lastStep.roll}" ` +
      `data-explored="${lastStep.explored}" data-q-before="${lastStep.q_before}" ` +
      `data-q-after="${lastStep.q_after}" data-reward="${lastStep.reward}">` +
      `rolled ${lastStep.roll} (${lastStep.explored ? "explore" : "exploit"}), ` +
      `took ${escapeHtml(lastStep.action)}, reward ${lastStep.reward}: ` +
      `Q ${lastStep.q_before} -&gt; ${lastStep.q_after}</aside>`
    : "";
  return (
    `<section class="qmaze" data-episode="${payload.episode}" ` +
    `data-steps-used="${payload.steps_used}" data-budget="${payload.budget}" ` +
    `data-episode-done="${payload.episode_done}">` +
    `<header>episode ${payload.episode} - step ${payload.steps_used}/${payload.budget}</header>` +
    `<table class="grid">${rows.join("")}</table>` +
    `${stepPanel}` +
    `<nav class="controls"><button data-action="step">roll &amp; step</button>` +
    `<button data-action="reset">new episode</button></nav>` +
    `</section>`
  );
}

export function renderSearchView(
  payload: SearchAlgorithmPayload,
  frontier?: FrontierPayload,
): string {
  const tree = Object.entries(payload.parents)
    .map(
      ([child, [parent, action]]) =>
        `<li data-child="${escapeHtml(child)}" data-parent="${escapeHtml(parent)}">` +
        `${escapeHtml(parent)} -[${escapeHtml(action)}]-> ${escapeHtml(child)}</li>`,
    )
    .join("");
  const visited = payload.visited
    .map((s) => `<span class="visited" data-state="${escapeHtml(s)}">${escapeHtml(s)}</span>`)
    .join(" ");
  const frontierList = (frontier?.frontier ?? [])
    .map(
      (entry) =>
        `<li data-state="${escapeHtml(entry.state)}" data-g="${entry.g}">` +
        `${escapeHtml(entry.state)} (g=${entry.g})</li>`,
    )
    .join("");
  const result = payload.result
    ? `<p class="result" data-found="${payload.result.found}" data-cost="${payload.result.total_cost}">` +
      `path: ${payload.result.path_states.map(escapeHtml).join(" -> ")} ` +
      `(cost ${payload.result.total_cost})</p>`
    : "";
  return (
    `<section class="search" data-status="${escapeHtml(payload.status)}" ` +
    `data-algo="${escapeHtml(payload.algo)}" data-expansions="${payload.expansions}">` +
    `<header>${escapeHtml(payload.algo)} - ${escapeHtml(payload.status)} - ` +
    `${payload.expansions} expansions</header>` +
    `<div class="visited-set">${visited}</div>` +
    `<ul class="tree">${tree}</ul>` +
    `<ol class="frontier">${frontierList}</ol>` +
    `<nav class="controls"><button data-action="step">step</button>` +
    `<button data-action="run">run</button></nav>` +
    `${result}</section>`
  );
}
