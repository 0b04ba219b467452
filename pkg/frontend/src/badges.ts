/** Presentation mapping from service-provided fields to badge/pips.
 *
 * Only mapping lives here: the console never computes a score, it
 * renders what the service said.
 */

import type { AskResult } from "./types.js";

export type BadgeColor = "green" | "amber" | "red" | "gray";

export interface Badge {
  label: "High" | "Medium" | "Low" | "Refused";
  color: BadgeColor;
  /** Shown under every Low-confidence answer. */
  caption: string | null;
}

export const VERIFY_CAPTION = "Low confidence - verify before use";

const COLORS: Record<Badge["label"], BadgeColor> = {
  High: "green",
  Medium: "amber",
  Low: "red",
  Refused: "gray",
};

export function badgeFor(result: AskResult): Badge {
  const label = result.intent.refused
    ? "Refused"
    : (result.confidence as Badge["label"]);
  return {
    label,
    color: COLORS[label],
    caption: label === "Low" ? VERIFY_CAPTION : null,
  };
}

/** The four quality checks as ordered booleans; empty for refusals. */
export function metricPips(result: AskResult): boolean[] {
  const q = result.quality;
  if (!q) {
    return [];
  }
  return [q.contextual_pass, q.numeric_pass, q.uniqueness_pass, q.grammatical_pass];
}
