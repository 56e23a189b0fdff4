/** Token-level diff for the side-by-side candidate comparison. */

export type DiffOp = "same" | "del" | "ins";

export interface DiffSpan {
  text: string;
  op: DiffOp;
}

function tokens(text: string): string[] {
  return text.split(/\s+/).filter((t) => t.length > 0);
}

/**
 * Diff two texts at token granularity via longest common subsequence.
 *
 * Spans come out in reading order: "del" tokens belong to `a` only, "ins"
 * tokens to `b` only, "same" to both. Adjacent tokens with the same op are
 * merged into one span.
 */
export function tokenDiff(a: string, b: string): DiffSpan[] {
  const ta = tokens(a);
  const tb = tokens(b);
  const m = ta.length;
  const n = tb.length;
  // lcs[i][j] = LCS length of ta[i:] and tb[j:]
  const lcs: number[][] = Array.from({ length: m + 1 }, () => new Array(n + 1).fill(0));
  for (let i = m - 1; i >= 0; i--) {
    for (let j = n - 1; j >= 0; j--) {
      lcs[i][j] =
        ta[i] === tb[j] ? lcs[i + 1][j + 1] + 1 : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const raw: DiffSpan[] = [];
  let i = 0;
  let j = 0;
  while (i < m && j < n) {
    if (ta[i] === tb[j]) {
      raw.push({ text: ta[i], op: "same" });
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      raw.push({ text: ta[i], op: "del" });
      i++;
    } else {
      raw.push({ text: tb[j], op: "ins" });
      j++;
    }
  }
  while (i < m) raw.push({ text: ta[i++], op: "del" });
  while (j < n) raw.push({ text: tb[j++], op: "ins" });

  const merged: DiffSpan[] = [];
  for (const span of raw) {
    const last = merged[merged.length - 1];
    if (last && last.op === span.op) {
      last.text += " " + span.text;
    } else {
      merged.push({ ...span });
    }
  }
  return merged;
}

/** Spans for one pane: the base pane keeps deletions, the other keeps insertions. */
export function paneSpans(spans: DiffSpan[], pane: "base" | "other"): DiffSpan[] {
  const drop: DiffOp = pane === "base" ? "ins" : "del";
  return spans.filter((s) => s.op !== drop);
}
