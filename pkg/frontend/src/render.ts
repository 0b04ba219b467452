/** Terminal rendering of conversation turns (ANSI colors). */

import type { BadgeColor } from "./badges.js";
import type { ConversationTurn } from "./conversation.js";

const ANSI: Record<BadgeColor, string> = {
  green: "\x1b[32m",
  amber: "\x1b[33m",
  red: "\x1b[31m",
  gray: "\x1b[90m",
};
const RESET = "\x1b[0m";

export function renderTurn(turn: ConversationTurn, color = true): string {
  const paint = (c: BadgeColor, text: string) =>
    color ? `${ANSI[c]}${text}${RESET}` : text;
  const pips = turn.pips.length
    ? "  checks " + turn.pips.map((p) => (p ? "●" : "○")).join("")
    : "";
  const lines = [
    `> ${turn.question}`,
    turn.answer,
    `[${paint(turn.badge.color, turn.badge.label)}]${pips}  ` +
      `${turn.latencyMs.toFixed(1)} ms  via ${turn.backendId}`,
  ];
  if (turn.badge.caption) {
    lines.push(paint("red", `! ${turn.badge.caption}`));
  }
  if (turn.provenance.length) {
    lines.push("sources:");
    for (const p of turn.provenance) {
      lines.push(`  [${p.chunk_id}] ${p.sentence}`);
    }
  }
  if (turn.rating === "up" || turn.rating === "down") {
    lines.push(`rated ${turn.rating === "up" ? "+1" : "-1"}`);
  }
  if (turn.feedbackError) {
    lines.push(`feedback failed: ${turn.feedbackError}`);
  }
  return lines.join("\n");
}
