import { CardNode, ViewState, canSubmit, cardGroups } from "./state.js";
import {
  CreateSessionRequest,
  DIMENSIONS,
  DimensionLabel,
  EventView,
  SessionView,
  TmEntryView,
} from "./types.js";
import { paneSpans, tokenDiff } from "./diff.js";

export interface ViewHandlers {
  onCreate(req: CreateSessionRequest): void;
  onRoute(instruction: string): void;
  onToggleOverride(label: DimensionLabel): void;
  onOverride(): void;
  onInvoke(): void;
  onRevise(candidateId: string, instruction: string): void;
  onSynthesize(): void;
  onConfirm(candidateId: string): void;
  onDismiss(code: string): void;
  onCompare(candidateId: string): void;
  onClearDiff(): void;
  onTmSearch(query: string): void;
  onRefresh(): void;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function shortId(id: string): string {
  return id.length > 8 ? id.slice(0, 8) : id;
}

function bannersHtml(state: ViewState): string {
  if (state.banners.length === 0) return "";
  const items = state.banners
    .map(
      (b) => `
      <div class="banner" data-code="${esc(b.code)}" role="alert">
        <strong>${esc(b.code)}</strong> ${esc(b.message)}
        <button type="button" class="banner-dismiss" data-code="${esc(b.code)}">dismiss</button>
      </div>`,
    )
    .join("");
  return `<div class="banners">${items}</div>`;
}

function createScreenHtml(state: ViewState): string {
  const busy = state.pending !== null;
  return `
    ${bannersHtml(state)}
    <section class="create-screen panel">
      <h1>New translation session</h1>
      <label>Source text
        <textarea id="create-source" rows="4" ${busy ? "disabled" : ""}></textarea>
      </label>
      <div class="row">
        <label>From <input id="create-src" value="de" ${busy ? "disabled" : ""}></label>
        <label>To <input id="create-tgt" value="en" ${busy ? "disabled" : ""}></label>
      </div>
      <label>Goal <input id="create-goal" placeholder="what should this translation achieve?" ${busy ? "disabled" : ""}></label>
      <label>Existing draft (optional)
        <textarea id="create-draft" rows="2" ${busy ? "disabled" : ""}></textarea>
      </label>
      <div class="row">
        <label>Domain <input id="create-domain" ${busy ? "disabled" : ""}></label>
        <label>Audience <input id="create-audience" ${busy ? "disabled" : ""}></label>
      </div>
      <button type="button" id="create-submit" ${busy ? "disabled" : ""}>Create session</button>
    </section>`;
}

function routingHtml(state: ViewState, session: SessionView, readOnly: boolean): string {
  const disabled = readOnly || !canSubmit(state) ? "disabled" : "";
  let decisionHtml = `<p class="no-decision">Nothing routed yet.</p>`;
  if (session.decision) {
    const chips = session.decision.dimensions
      .map((d) => `<span class="decision-chip" data-dim="${esc(d)}">${esc(d)}</span>`)
      .join("");
    decisionHtml = `
      <div class="decision">
        <div class="decision-chips">${chips}</div>
        <p class="routing-rationale">${esc(session.decision.rationale)}</p>
        <p class="routing-origin">source: ${esc(session.decision.origin)}</p>
      </div>`;
  }
  const picker = DIMENSIONS.map((label) => {
    const checked = state.overridePick.includes(label);
    const full = state.overridePick.length >= 3 && !checked;
    return `
      <label class="pick">
        <input type="checkbox" class="override-pick" data-dim="${esc(label)}"
          ${checked ? "checked" : ""} ${readOnly || full ? "disabled" : ""}>
        ${esc(label)}
      </label>`;
  }).join("");
  const overrideReady = state.overridePick.length >= 1 && state.overridePick.length <= 3;
  return `
    <section class="panel routing-panel">
      <h2>Routing</h2>
      ${decisionHtml}
      <div class="route-controls">
        <input id="route-instruction" placeholder="what matters for this text?" ${disabled}>
        <button type="button" data-action="route" ${disabled}>Route</button>
      </div>
      <details class="override">
        <summary>Override dimensions (pick up to 3)</summary>
        <div class="override-picker">${picker}</div>
        <button type="button" data-action="override" ${disabled || !overrideReady ? "disabled" : ""}>
          Apply override
        </button>
      </details>
    </section>`;
}

function citesHtml(refs: string[], tm: Map<string, TmEntryView>): string {
  if (refs.length === 0) return "";
  const items = refs
    .map((id) => {
      const entry = tm.get(id);
      if (!entry) return `<li class="tm-cite">entry ${esc(shortId(id))}</li>`;
      return `<li class="tm-cite">${esc(entry.kind)}: ${esc(entry.source_text)} &rarr; ${esc(entry.target_text)}</li>`;
    })
    .join("");
  return `<ul class="cites">${items}</ul>`;
}

function cardHtml(node: CardNode, state: ViewState, readOnly: boolean): string {
  const c = node.candidate;
  const disabled = readOnly || !canSubmit(state) ? "disabled" : "";
  const lineage = c.parent_id
    ? `<p class="lineage">revision of ${esc(shortId(c.parent_id))} &middot; round ${c.round}</p>`
    : "";
  const compareLabel = state.diffBase === c.candidate_id ? "Comparing..." : "Compare";
  const children = node.children.map((child) => cardHtml(child, state, readOnly)).join("");
  return `
    <article class="candidate-card" data-id="${esc(c.candidate_id)}"
      data-dimension="${esc(c.dimension ?? "")}" data-role="${esc(c.role)}" data-round="${c.round}">
      <header>
        <span class="card-badge">${esc(c.dimension ?? (c.role === "editor" ? "Editor" : "Translator"))}</span>
        <span class="card-id">${esc(shortId(c.candidate_id))}</span>
      </header>
      ${lineage}
      <p class="card-text">${esc(c.text)}</p>
      <p class="card-explanation">${esc(c.explanation)}</p>
      ${citesHtml(c.tm_refs, state.tmEntries)}
      <div class="card-actions">
        <input class="revise-input" data-id="${esc(c.candidate_id)}"
          placeholder="targeted revision instruction" ${disabled}>
        <button type="button" class="revise-btn" data-id="${esc(c.candidate_id)}" ${disabled}>Revise</button>
        <button type="button" class="confirm-btn" data-id="${esc(c.candidate_id)}" ${disabled}>Confirm</button>
        <button type="button" class="compare-btn" data-id="${esc(c.candidate_id)}">${compareLabel}</button>
      </div>
      ${children ? `<div class="card-children">${children}</div>` : ""}
    </article>`;
}

function candidatesHtml(state: ViewState, session: SessionView, readOnly: boolean): string {
  const groups = cardGroups(session);
  if (groups.length === 0) {
    return `<section class="panel"><h2>Candidates</h2><p class="no-candidates">No candidates yet. Route, then invoke the selected agents.</p></section>`;
  }
  const body = groups
    .map(
      (g) => `
      <div class="card-group" data-group="${esc(g.label)}">
        <h3>${esc(g.label)}</h3>
        ${g.cards.map((n) => cardHtml(n, state, readOnly)).join("")}
      </div>`,
    )
    .join("");
  return `<section class="panel"><h2>Candidates</h2>${body}</section>`;
}

function diffHtml(state: ViewState, session: SessionView): string {
  if (!state.diffBase || !state.selectedCandidate) return "";
  const base = session.candidates.find((c) => c.candidate_id === state.diffBase);
  const other = session.candidates.find((c) => c.candidate_id === state.selectedCandidate);
  if (!base || !other) return "";
  const spans = tokenDiff(base.text, other.text);
  const pane = (side: "base" | "other") =>
    paneSpans(spans, side)
      .map((s) => (s.op === "same" ? esc(s.text) : `<mark class="${s.op}">${esc(s.text)}</mark>`))
      .join(" ");
  return `
    <section class="panel diff-panel">
      <h2>Compare</h2>
      <div class="diff-panes">
        <div class="diff-pane"><h4>${esc(shortId(base.candidate_id))}</h4><p>${pane("base")}</p></div>
        <div class="diff-pane"><h4>${esc(shortId(other.candidate_id))}</h4><p>${pane("other")}</p></div>
      </div>
      <button type="button" id="diff-clear">Close</button>
    </section>`;
}

function timelineHtml(events: EventView[]): string {
  const items = events
    .map(
      (e) =>
        `<li class="timeline-entry" data-kind="${esc(e.kind)}">
          <span class="seq">#${e.seq}</span> <span class="kind">${esc(e.kind)}</span>
          <span class="at">${esc(e.at)}</span>
        </li>`,
    )
    .join("");
  return `
    <section class="panel timeline-panel">
      <h2>Timeline</h2>
      <ol class="timeline">${items}</ol>
    </section>`;
}

function tmBrowserHtml(state: ViewState): string {
  const rows = state.tmResults
    .map(
      (r) => `
      <li class="tm-result">
        <span class="tm-score">${r.score.toFixed(2)}</span>
        ${esc(r.entry.source_text)} &rarr; ${esc(r.entry.target_text)}
        <span class="tm-kind">${esc(r.entry.kind)}</span>
      </li>`,
    )
    .join("");
  return `
    <details class="panel tm-browser">
      <summary>Translation memory</summary>
      <div class="row">
        <input id="tm-query" placeholder="search the memory">
        <button type="button" id="tm-search">Search</button>
      </div>
      <ul class="tm-results">${rows}</ul>
    </details>`;
}

function sessionScreenHtml(state: ViewState, session: SessionView): string {
  const readOnly = session.status === "confirmed";
  const pair = `${session.language_pair.source_lang} &rarr; ${session.language_pair.target_lang}`;
  return `
    ${bannersHtml(state)}
    <header class="session-header ${readOnly ? "readonly" : ""}">
      <h1>Session ${esc(shortId(session.session_id))}</h1>
      <span class="pair">${pair}</span>
      <span class="status-chip" data-status="${esc(session.status)}">${esc(session.status)}</span>
      <button type="button" id="refresh" title="re-fetch the session snapshot">Refresh</button>
    </header>
    <section class="panel text-panel">
      <div class="col">
        <h2>Source</h2>
        <p class="source-text">${esc(session.source_text)}</p>
        ${session.goal ? `<p class="goal">Goal: ${esc(session.goal)}</p>` : ""}
      </div>
      <div class="col">
        <h2>Current translation</h2>
        <p class="current-text">${esc(session.current_text || "(empty)")}</p>
      </div>
    </section>
    ${routingHtml(state, session, readOnly)}
    <div class="bulk-actions">
      <button type="button" data-action="invoke" ${readOnly || !canSubmit(state) || !session.decision ? "disabled" : ""}>
        Invoke selected agents
      </button>
      <button type="button" data-action="synthesize" ${readOnly || !canSubmit(state) || session.candidates.length === 0 ? "disabled" : ""}>
        Synthesize
      </button>
    </div>
    ${candidatesHtml(state, session, readOnly)}
    ${diffHtml(state, session)}
    ${readOnly ? timelineHtml(session.events) : ""}
    ${tmBrowserHtml(state)}`;
}

function wire(root: HTMLElement, state: ViewState, handlers: ViewHandlers): void {
  const byId = (id: string) => root.querySelector<HTMLElement>(`#${id}`);
  const input = (id: string) => root.querySelector<HTMLInputElement>(`#${id}`);
  const area = (id: string) => root.querySelector<HTMLTextAreaElement>(`#${id}`);

  byId("create-submit")?.addEventListener("click", () => {
    handlers.onCreate({
      source: area("create-source")?.value ?? "",
      src_lang: input("create-src")?.value ?? "",
      tgt_lang: input("create-tgt")?.value ?? "",
      goal: input("create-goal")?.value ?? "",
      draft: area("create-draft")?.value ?? "",
      job: {
        domain_tag: input("create-domain")?.value ?? "",
        audience_note: input("create-audience")?.value ?? "",
      },
    });
  });

  root.querySelector(`[data-action="route"]`)?.addEventListener("click", () => {
    handlers.onRoute(input("route-instruction")?.value ?? "");
  });
  root.querySelectorAll<HTMLInputElement>(".override-pick").forEach((box) => {
    box.addEventListener("change", () => {
      handlers.onToggleOverride(box.dataset.dim as DimensionLabel);
    });
  });
  root.querySelector(`[data-action="override"]`)?.addEventListener("click", handlers.onOverride);
  root.querySelector(`[data-action="invoke"]`)?.addEventListener("click", handlers.onInvoke);
  root
    .querySelector(`[data-action="synthesize"]`)
    ?.addEventListener("click", handlers.onSynthesize);

  root.querySelectorAll<HTMLButtonElement>(".revise-btn").forEach((btn) => {
    btn.addEventListener("click", () => {
      const id = btn.dataset.id ?? "";
      const field = root.querySelector<HTMLInputElement>(`.revise-input[data-id="${id}"]`);
      handlers.onRevise(id, field?.value ?? "");
    });
  });
  root.querySelectorAll<HTMLButtonElement>(".confirm-btn").forEach((btn) => {
    btn.addEventListener("click", () => handlers.onConfirm(btn.dataset.id ?? ""));
  });
  root.querySelectorAll<HTMLButtonElement>(".compare-btn").forEach((btn) => {
    btn.addEventListener("click", () => handlers.onCompare(btn.dataset.id ?? ""));
  });
  root.querySelectorAll<HTMLButtonElement>(".banner-dismiss").forEach((btn) => {
    btn.addEventListener("click", () => handlers.onDismiss(btn.dataset.code ?? ""));
  });
  byId("diff-clear")?.addEventListener("click", handlers.onClearDiff);
  byId("refresh")?.addEventListener("click", handlers.onRefresh);
  byId("tm-search")?.addEventListener("click", () => {
    handlers.onTmSearch(input("tm-query")?.value ?? "");
  });
}

/** Redraw the whole app from state. The single rendering entry point. */
export function render(root: HTMLElement, state: ViewState, handlers: ViewHandlers): void {
  root.innerHTML = state.session
    ? sessionScreenHtml(state, state.session)
    : createScreenHtml(state);
  wire(root, state, handlers);
}
