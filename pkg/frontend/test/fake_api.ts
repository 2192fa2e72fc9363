// In-memory stand-in for the campaign service, serving payloads captured
// from the real HTTP API (test/fixtures/*.json) and reproducing its stage
// transitions, so the UI tests assert against true wire shapes.

import candidatesFixture from "./fixtures/candidates.json";
import createFixture from "./fixtures/create_response.json";
import reportFixture from "./fixtures/report.json";
import selectionErrorFixture from "./fixtures/selection_error_422.json";
import selectionFixture from "./fixtures/selection_response.json";
import snapshotAnalysis from "./fixtures/snapshot_analysis.json";
import snapshotDone from "./fixtures/snapshot_done.json";
import snapshotExecution from "./fixtures/snapshot_execution.json";
import snapshotFeedback from "./fixtures/snapshot_feedback.json";
import type { Report, SelectionEntry, Snapshot } from "../src/types.js";

type Json = Record<string, unknown>;

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export class FakeApi {
  stage: string | null = null;
  roundsCompleted = 0;
  version = 0;
  failNext = false;
  requests: string[] = [];

  install(): void {
    globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
      const url = String(input instanceof Request ? input.url : input);
      const method = init?.method ?? "GET";
      const body = init?.body ? JSON.parse(String(init.body)) : undefined;
      return this.handle(method, url, body);
    }) as typeof fetch;
  }

  private snapshot(): Snapshot {
    let base: Json;
    if (this.stage === "analysis") {
      base = snapshotAnalysis as Json;
    } else if (this.stage === "retrieval" || this.stage === "mining") {
      base = { ...(snapshotAnalysis as Json), stage: this.stage };
    } else if (this.stage === "feedback") {
      base = snapshotFeedback as Json;
    } else if (this.stage === "execution" && this.roundsCompleted === 0) {
      base = snapshotExecution as Json;
    } else if (this.stage === "execution") {
      const done = snapshotDone as Json;
      base = {
        ...done,
        stage: "execution",
        rounds_completed: this.roundsCompleted,
        best_so_far: (done.best_so_far as number[]).slice(0, this.roundsCompleted),
      };
    } else {
      base = snapshotDone as Json;
    }
    return { ...base, version: this.version } as unknown as Snapshot;
  }

  private report(): Report {
    const full = reportFixture as unknown as Report;
    if (this.roundsCompleted >= full.rounds.length) return full;
    return {
      ...full,
      rounds_completed: this.roundsCompleted,
      rounds: full.rounds.slice(0, this.roundsCompleted),
      best_so_far: full.best_so_far.slice(0, this.roundsCompleted),
      top_recipes: full.top_recipes.filter((r) => r.round <= this.roundsCompleted),
    };
  }

  handle(method: string, url: string, body?: Json): Response {
    this.requests.push(`${method} ${url}`);
    if (this.failNext) {
      this.failNext = false;
      throw new TypeError("network down");
    }
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];

    if (method === "POST" && path === "/campaigns") {
      this.stage = "analysis";
      this.version = 1;
      return jsonResponse(createFixture, 201);
    }
    if (method === "GET" && path === "/campaigns/uidemo") {
      return jsonResponse(this.snapshot());
    }
    if (method === "POST" && path === "/campaigns/uidemo/advance") {
      const order = ["analysis", "retrieval", "mining", "feedback"];
      const index = order.indexOf(this.stage ?? "");
      if (index < 0 || this.stage === "feedback") {
        return jsonResponse({ code: "precondition_failed", message: "gated" }, 409);
      }
      this.stage = order[index + 1];
      this.version += 1;
      return jsonResponse({ status: "accepted", job: `advance:${order[index]}` }, 202);
    }
    if (method === "GET" && path === "/campaigns/uidemo/candidates") {
      return jsonResponse(candidatesFixture);
    }
    if (method === "POST" && path === "/campaigns/uidemo/selection") {
      const selections = (body?.selections ?? []) as SelectionEntry[];
      const known = new Set(candidatesFixture.entries.map((e) => e.cas));
      const colorants = selections.filter((s) => s.role === "colorant").length;
      const solvents = selections.filter((s) => s.role === "solvent").length;
      if (selections.some((s) => !known.has(s.cas))) {
        return jsonResponse({ code: "unknown_candidate", message: "not mined" }, 422);
      }
      if (colorants < 1 || solvents !== 1) {
        return jsonResponse(selectionErrorFixture, 422);
      }
      this.stage = "execution";
      this.version += 1;
      return jsonResponse(selectionFixture);
    }
    if (method === "POST" && path === "/campaigns/uidemo/rounds") {
      const count = Number(body?.count ?? 1);
      this.roundsCompleted = Math.min(this.roundsCompleted + count, 2);
      if (this.roundsCompleted >= 2) this.stage = "done";
      this.version += 1;
      return jsonResponse({ status: "accepted", job: `rounds:${count}` }, 202);
    }
    if (method === "GET" && path === "/campaigns/uidemo/report") {
      if (this.roundsCompleted === 0) {
        return jsonResponse({ code: "no_rounds", message: "no completed rounds" }, 409);
      }
      return jsonResponse(this.report());
    }
    return jsonResponse({ code: "campaign_not_found", message: `no route ${path}` }, 404);
  }
}
