/** Wire types mirroring the service replies; nothing here is recomputed client-side. */

export interface IntentInfo {
  label: string;
  priority: number | null;
  matched_pattern: string | null;
  refused: boolean;
  refusal_message?: string | null;
}

export interface QualityInfo {
  contextual_pass: boolean;
  numeric_pass: boolean;
  uniqueness_pass: boolean;
  grammatical_pass: boolean;
  confidence: string;
  verified_numbers: Array<{ value: string; raw: string; provenance: string }>;
  unverified_numbers: Array<{ value: string; raw: string }>;
  context_overlap: number;
}

export interface AskResult {
  question: string;
  intent: IntentInfo;
  answer: string;
  confidence?: "Low" | "Medium" | "High";
  quality?: QualityInfo;
  chunk_ids_used: string[];
  backend_id: string;
  latency_total_ms: number;
  latency_llm_ms: number;
  prompt_hash: string;
  timestamp: string;
}

export interface ChunkHit {
  chunk_id: string;
  score: number;
  rank: number;
  sentence: string;
}

export interface HealthInfo {
  status: string;
  corpus_fingerprint: string;
  chunk_count: number;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  stage: string;
}

export interface BenchmarkReport {
  suite_fingerprint: string;
  run_count: number;
  timestamp: string;
  backends: Record<string, unknown>;
}
