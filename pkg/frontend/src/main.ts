/** Interactive console: type a question, read the badged answer,
 *  rate with `+` / `-`, quit with `.quit`.
 *
 *  Service base URL comes from FINQA_BASE_URL (default localhost:8040).
 */

import * as readline from "node:readline/promises";
import { stdin, stdout } from "node:process";

import { ApiClient } from "./api.js";
import { ConversationStore } from "./conversation.js";
import { renderTurn } from "./render.js";

async function main(): Promise<void> {
  const api = new ApiClient();
  const store = new ConversationStore(api);

  const health = await api.health().catch(() => null);
  if (!health) {
    console.error("service unreachable - start it with: finqa serve");
    process.exitCode = 1;
    return;
  }
  console.log(
    `connected: ${health.chunk_count} chunks ` +
      `(corpus ${health.corpus_fingerprint.slice(0, 12)})`,
  );
  console.log("ask a question; '+'/'-' rates the last answer; '.quit' exits\n");

  const rl = readline.createInterface({ input: stdin, output: stdout });
  for (;;) {
    const line = (await rl.question("? ")).trim();
    if (line === ".quit") {
      break;
    }
    const last = store.turns[store.turns.length - 1];
    if ((line === "+" || line === "-") && last) {
      await store.rate(last, line === "+" ? 1 : -1);
      console.log(renderTurn(last));
      continue;
    }
    if (!line) {
      continue;
    }
    const turn = await store.submitQuestion(line);
    console.log(turn ? renderTurn(turn) : `error: ${store.errorBanner}`);
    console.log();
  }
  rl.close();
}

main();
