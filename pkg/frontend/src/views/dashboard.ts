import type { ApiClient } from "../api.js";
import type { Report, Snapshot } from "../types.js";
import { bestSoFarChart, chartLegend, compositionChart, histogramChart } from "../charts.js";

export interface DashboardHandlers {
  onRoundStarted(): void;
}

/** Round progress, score distributions, best-so-far, composition stacks. */
export function renderDashboard(
  container: HTMLElement,
  api: ApiClient,
  snapshot: Snapshot,
  report: Report | null,
  handlers: DashboardHandlers,
): void {
  container.replaceChildren();
  const box = document.createElement("div");

  const runDisabled = snapshot.stage === "done" || snapshot.job.status === "running";
  box.innerHTML = `
    <h2>Optimization rounds</h2>
    <div class="statline">
      rounds completed <b data-testid="rounds-completed">${snapshot.rounds_completed}</b>
      of <b data-testid="rounds-total">${snapshot.rounds_total}</b>
      &middot; batch size <b data-testid="batch-size">${snapshot.batch_size}</b>
      &middot; stage <b data-testid="stage-value">${snapshot.stage}</b>
    </div>
    <div class="block">
      <div class="pbar-wrap"><div class="pbar-fill" data-testid="round-progress"
        style="width:${snapshot.progress.fraction * 100}%"></div></div>
      <div class="statline">current round ${snapshot.progress.round}:
        <span data-testid="evaluated">${snapshot.progress.evaluated}</span> /
        <span data-testid="progress-batch">${snapshot.progress.batch_size}</span> evaluated</div>
    </div>
    <div class="block toolbar">
      <label class="beta-label">explore
        <input type="range" min="0" max="5" step="0.1" value="2"
               data-testid="beta-slider"> exploit</label>
      <span data-testid="beta-value">2</span>
      <button data-testid="run-round" ${runDisabled ? "disabled" : ""}>Run next round</button>
      <span class="error" data-testid="round-error" hidden></span>
    </div>
    <div class="block" data-testid="distributions"><h3>Score distribution per round</h3></div>
    <div class="block" data-testid="best-so-far"><h3>Best score so far</h3></div>
    <div class="block" data-testid="compositions"><h3>Composition totals per round</h3></div>
  `;

  const slider = box.querySelector<HTMLInputElement>('[data-testid="beta-slider"]')!;
  const betaValue = box.querySelector<HTMLElement>('[data-testid="beta-value"]')!;
  slider.addEventListener("input", () => {
    betaValue.textContent = slider.value;
  });

  box.querySelector('[data-testid="run-round"]')!.addEventListener("click", async () => {
    const errorBox = box.querySelector<HTMLElement>('[data-testid="round-error"]')!;
    errorBox.hidden = true;
    try {
      await api.runRounds(snapshot.campaign_id, 1, Number(slider.value));
      handlers.onRoundStarted();
    } catch (err) {
      errorBox.textContent = err instanceof Error ? err.message : String(err);
      errorBox.hidden = false;
    }
  });

  const distributions = box.querySelector<HTMLElement>('[data-testid="distributions"]')!;
  const bestBox = box.querySelector<HTMLElement>('[data-testid="best-so-far"]')!;
  const compositions = box.querySelector<HTMLElement>('[data-testid="compositions"]')!;

  if (report === null || report.rounds.length === 0) {
    const note = document.createElement("p");
    note.dataset.testid = "no-rounds-note";
    note.textContent = "No completed rounds yet; run the first round to see results.";
    distributions.appendChild(note);
  } else {
    for (const round of report.rounds) {
      const card = document.createElement("div");
      card.className = "chart-card";
      card.dataset.testid = "round-distribution";
      card.dataset.round = String(round.round);
      const caption = document.createElement("div");
      caption.className = "chart-caption";
      caption.innerHTML =
        `round ${round.round}: n=<span data-field="count">${round.count}</span>, ` +
        `max <span data-field="score_max">${round.score_max}</span>, ` +
        `median <span data-field="score_median">${round.score_median}</span>, ` +
        `near zero <span data-field="fraction_near_zero">${round.fraction_near_zero}</span>`;
      card.appendChild(caption);
      card.appendChild(histogramChart(round.histogram));
      distributions.appendChild(card);
    }

    bestBox.appendChild(bestSoFarChart(report.best_so_far));
    const series = document.createElement("div");
    series.dataset.testid = "best-series";
    series.textContent = report.best_so_far.map(String).join(", ");
    bestBox.appendChild(series);

    const keys = Object.keys(report.rounds[0].composition_totals);
    compositions.appendChild(compositionChart(report.rounds, keys));
    compositions.appendChild(chartLegend(keys));
  }

  container.appendChild(box);
}
