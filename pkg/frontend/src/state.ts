import {
  CandidateView,
  DimensionLabel,
  SessionView,
  TmEntryView,
  dimensionRank,
} from "./types.js";

/** Names of the mutations the workbench can have in flight. */
export type ActionKind =
  | "create"
  | "route"
  | "override"
  | "invoke"
  | "revise"
  | "synthesize"
  | "confirm";

export interface Banner {
  code: string;
  message: string;
}

/**
 * Everything the screen is drawn from.
 *
 * One pending action at a time serializes the human loop; apart from
 * transient UI choices (selection, staged override, banners) the state is
 * reconstructable from a single session fetch.
 */
export interface ViewState {
  session: SessionView | null;
  pending: ActionKind | null;
  selectedCandidate: string | null;
  diffBase: string | null;
  banners: Banner[];
  overridePick: DimensionLabel[];
  tmEntries: Map<string, TmEntryView>;
  tmResults: { entry: TmEntryView; score: number }[];
}

export function initialState(): ViewState {
  return {
    session: null,
    pending: null,
    selectedCandidate: null,
    diffBase: null,
    banners: [],
    overridePick: [],
    tmEntries: new Map(),
    tmResults: [],
  };
}

export function canSubmit(state: ViewState): boolean {
  return state.pending === null && state.session?.status !== "confirmed";
}

/** Add a banner, replacing any prior one with the same code. */
export function pushBanner(state: ViewState, code: string, message: string): void {
  state.banners = state.banners.filter((b) => b.code !== code);
  state.banners.push({ code, message });
}

export function dismissBanner(state: ViewState, code: string): void {
  state.banners = state.banners.filter((b) => b.code !== code);
}

/** Toggle a dimension in the staged override, capped at three picks. */
export function toggleOverridePick(state: ViewState, label: DimensionLabel): void {
  if (state.overridePick.includes(label)) {
    state.overridePick = state.overridePick.filter((l) => l !== label);
  } else if (state.overridePick.length < 3) {
    state.overridePick = [...state.overridePick, label];
  }
}

export interface CardNode {
  candidate: CandidateView;
  children: CardNode[];
}

export interface CardGroup {
  label: string;
  cards: CardNode[];
}

function groupLabel(candidate: CandidateView): string {
  if (candidate.dimension !== null) return candidate.dimension;
  return candidate.role === "editor" ? "Editor" : "Translator";
}

/**
 * Candidate cards grouped by dimension in canonical order, with revision
 * children nested under their parents. Editor and translator cards come
 * after the dimension groups.
 */
export function cardGroups(session: SessionView): CardGroup[] {
  const nodes = new Map<string, CardNode>();
  for (const cand of session.candidates) {
    nodes.set(cand.candidate_id, { candidate: cand, children: [] });
  }
  const roots: CardNode[] = [];
  for (const cand of session.candidates) {
    const node = nodes.get(cand.candidate_id)!;
    const parent = cand.parent_id ? nodes.get(cand.parent_id) : undefined;
    if (parent) {
      parent.children.push(node);
    } else {
      roots.push(node);
    }
  }
  const groups = new Map<string, CardGroup>();
  for (const root of roots) {
    const label = groupLabel(root.candidate);
    let group = groups.get(label);
    if (!group) {
      group = { label, cards: [] };
      groups.set(label, group);
    }
    group.cards.push(root);
  }
  return [...groups.values()].sort(
    (a, b) => dimensionRank(rankLabel(a.label)) - dimensionRank(rankLabel(b.label)),
  );
}

function rankLabel(label: string): string | null {
  return label === "Editor" || label === "Translator" ? null : label;
}

/** Candidates of the session in a flat list, canonical group order preserved. */
export function orderedCandidates(session: SessionView): CandidateView[] {
  const out: CandidateView[] = [];
  const walk = (node: CardNode) => {
    out.push(node.candidate);
    node.children.forEach(walk);
  };
  for (const group of cardGroups(session)) {
    group.cards.forEach(walk);
  }
  return out;
}
