/** Conversation state: the only client-side state is the turn list.
 *
 * One in-flight ask at a time; feedback is deduped per turn so a
 * double-click sends a single request.
 */

import { ApiClient, ApiError } from "./api.js";
import { Badge, badgeFor, metricPips } from "./badges.js";
import type { AskResult } from "./types.js";

export interface Provenance {
  chunk_id: string;
  sentence: string;
}

export type RatingState = "none" | "pending" | "up" | "down";

export interface ConversationTurn {
  question: string;
  answer: string;
  badge: Badge;
  pips: boolean[];
  provenance: Provenance[];
  latencyMs: number;
  promptHash: string;
  backendId: string;
  rating: RatingState;
  feedbackError: string | null;
}

export class ConversationStore {
  readonly turns: ConversationTurn[] = [];
  pending = false;
  /** Retryable banner for transport/service failures; null when clear. */
  errorBanner: string | null = null;

  constructor(private readonly api: ApiClient) {}

  /** Submit a question; resolves to the rendered turn or null if blocked. */
  async submitQuestion(text: string): Promise<ConversationTurn | null> {
    const question = text.trim();
    if (!question || this.pending) {
      return null; // EMPTY_QUERY is blocked client-side; one ask in flight
    }
    this.pending = true;
    this.errorBanner = null;
    try {
      const result = await this.api.ask(question);
      const turn = await this.buildTurn(result);
      this.turns.push(turn);
      return turn;
    } catch (err) {
      this.errorBanner =
        err instanceof ApiError
          ? `${err.envelope.code}: ${err.envelope.message}`
          : `network error: ${String(err)} (retry)`;
      return null;
    } finally {
      this.pending = false;
    }
  }

  private async buildTurn(result: AskResult): Promise<ConversationTurn> {
    return {
      question: result.question,
      answer: result.answer,
      badge: badgeFor(result),
      pips: metricPips(result),
      provenance: await this.resolveProvenance(result),
      latencyMs: result.latency_total_ms,
      promptHash: result.prompt_hash,
      backendId: result.backend_id,
      rating: "none",
      feedbackError: null,
    };
  }

  /** Provenance panel: the reply's chunk_ids_used joined with sentences
   *  fetched from /v1/chunks for the same question, in reply order. */
  private async resolveProvenance(result: AskResult): Promise<Provenance[]> {
    if (result.chunk_ids_used.length === 0) {
      return [];
    }
    const hits = await this.api.chunks(
      result.question,
      result.chunk_ids_used.length,
    );
    const sentences = new Map(hits.map((h) => [h.chunk_id, h.sentence]));
    return result.chunk_ids_used.map((chunk_id) => ({
      chunk_id,
      sentence: sentences.get(chunk_id) ?? "",
    }));
  }

  /** Rate a turn; repeated identical ratings are deduped client-side. */
  async rate(
    turn: ConversationTurn,
    rating: 1 | -1,
    correctedAnswer?: string,
  ): Promise<void> {
    const target: RatingState = rating === 1 ? "up" : "down";
    if (turn.rating === target || turn.rating === "pending") {
      return; // already latched or in flight: single request per decision
    }
    turn.rating = "pending";
    turn.feedbackError = null;
    try {
      await this.api.feedback(turn.promptHash, rating, correctedAnswer);
      turn.rating = target;
    } catch (err) {
      turn.rating = "none";
      turn.feedbackError =
        err instanceof ApiError ? err.envelope.code : String(err);
    }
  }
}
