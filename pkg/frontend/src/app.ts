import { ApiClient } from "./api.js";
import type { CandidatesPayload, Report, Snapshot } from "./types.js";
import {
  initialCandidatesState,
  renderCandidates,
  type CandidatesViewState,
} from "./views/candidates.js";
import { renderDashboard } from "./views/dashboard.js";
import { renderIntake } from "./views/intake.js";
import { renderReport } from "./views/report.js";

export type Tab = "intake" | "candidates" | "dashboard" | "report";

const EARLY_STAGES = new Set(["analysis", "retrieval", "mining"]);

export interface AppOptions {
  pollIntervalMs?: number;
  autoAdvance?: boolean;
}

/** Single-page app: one campaign view, one polling loop, stage-driven tabs. */
export class App {
  readonly api: ApiClient;
  campaignId: string | null = null;
  snapshot: Snapshot | null = null;
  candidates: CandidatesPayload | null = null;
  report: Report | null = null;
  stale = false;
  activeTab: Tab = "intake";
  candidatesState: CandidatesViewState = initialCandidatesState();

  private readonly autoAdvance: boolean;
  private readonly pollIntervalMs: number;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    readonly root: HTMLElement,
    api: ApiClient,
    options: AppOptions = {},
  ) {
    this.api = api;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.autoAdvance = options.autoAdvance ?? true;
    this.buildShell();
  }

  start(campaignId?: string): void {
    if (campaignId) this.campaignId = campaignId;
    this.render();
    if (this.timer === null) {
      this.timer = setInterval(() => void this.tick(), this.pollIntervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One poll cycle: refresh payloads, drive the pipeline, re-render. */
  async tick(): Promise<void> {
    if (this.campaignId === null) return;
    try {
      const snapshot = await this.api.snapshot(this.campaignId);
      // Snapshots are monotone in version; never render an older one.
      if (this.snapshot && snapshot.version < this.snapshot.version) return;
      const stageChanged = this.snapshot?.stage !== snapshot.stage;
      const versionChanged = this.snapshot?.version !== snapshot.version;
      this.snapshot = snapshot;
      this.stale = false;

      if (snapshot.candidates_mined > 0 && (this.candidates === null || versionChanged)) {
        this.candidates = await this.api.candidates(this.campaignId);
      }
      if (snapshot.rounds_completed > 0 && (this.report === null || versionChanged)) {
        this.report = await this.api.report(this.campaignId);
      }
      if (this.autoAdvance && EARLY_STAGES.has(snapshot.stage)
          && snapshot.job.status === "idle" && !snapshot.job.error) {
        await this.api.advance(this.campaignId);
      }
      if (stageChanged) this.activeTab = this.defaultTab(snapshot.stage);
    } catch {
      this.stale = true; // API unreachable: keep the last good payloads
    }
    this.render();
  }

  defaultTab(stage: string): Tab {
    if (stage === "feedback") return "candidates";
    if (stage === "execution") return "dashboard";
    if (stage === "done") return "report";
    return "intake";
  }

  tabEnabled(tab: Tab): boolean {
    if (tab === "intake") return true;
    if (this.snapshot === null) return false;
    if (tab === "candidates") return this.snapshot.candidates_mined > 0;
    if (tab === "dashboard") {
      return this.snapshot.stage === "execution" || this.snapshot.stage === "done";
    }
    return this.snapshot.rounds_completed > 0;
  }

  private buildShell(): void {
    this.root.innerHTML = `
      <header class="topbar">
        <h1>chromalab</h1>
        <nav data-testid="tabs"></nav>
        <div class="stale-banner" data-testid="stale-banner" hidden>
          connection lost; showing the last known state
        </div>
      </header>
      <main data-testid="view"></main>
    `;
  }

  render(): void {
    const nav = this.root.querySelector<HTMLElement>('[data-testid="tabs"]')!;
    nav.replaceChildren();
    for (const tab of ["intake", "candidates", "dashboard", "report"] as Tab[]) {
      const button = document.createElement("button");
      button.textContent = tab;
      button.dataset.testid = `tab-${tab}`;
      button.disabled = !this.tabEnabled(tab);
      button.className = tab === this.activeTab ? "tab active" : "tab";
      button.addEventListener("click", () => {
        this.activeTab = tab;
        this.render();
      });
      nav.appendChild(button);
    }

    this.root.querySelector<HTMLElement>('[data-testid="stale-banner"]')!.hidden = !this.stale;

    const view = this.root.querySelector<HTMLElement>('[data-testid="view"]')!;
    if (this.activeTab === "intake") {
      renderIntake(view, this.api, this.snapshot, {
        onCreated: (id) => {
          this.campaignId = id;
          void this.tick();
        },
      });
    } else if (this.activeTab === "candidates" && this.candidates && this.campaignId) {
      renderCandidates(view, this.api, this.campaignId, this.candidates,
        this.candidatesState, {
          onSubmitted: () => void this.tick(),
          rerender: () => this.render(),
        });
    } else if (this.activeTab === "dashboard" && this.snapshot) {
      renderDashboard(view, this.api, this.snapshot, this.report, {
        onRoundStarted: () => void this.tick(),
      });
    } else if (this.activeTab === "report") {
      renderReport(view, this.report);
    } else {
      view.replaceChildren();
    }
  }
}
