import type { Report } from "../types.js";

/** Final report: top recipes and the humidity-calibration accuracy figure. */
export function renderReport(container: HTMLElement, report: Report | null): void {
  container.replaceChildren();
  const box = document.createElement("div");

  if (report === null) {
    box.innerHTML = `<h2>Report</h2>
      <p data-testid="no-report-note">The report becomes available after the first round.</p>`;
    container.appendChild(box);
    return;
  }

  box.innerHTML = `
    <h2>Report: ${report.campaign_id}</h2>
    <div class="block">
      <h3>Top recipes</h3>
      <table class="recipes" data-testid="top-recipes">
        <thead><tr><th>rank</th><th>recipe</th><th>round</th><th>score</th>
          <th>composition</th></tr></thead>
        <tbody></tbody>
      </table>
    </div>
    <div class="block" data-testid="calibration-block"><h3>Humidity calibration</h3></div>
  `;

  const tbody = box.querySelector("tbody")!;
  for (const recipe of report.top_recipes) {
    const row = document.createElement("tr");
    row.dataset.testid = "top-recipe-row";
    const composition = Object.entries(recipe.composition)
      .map(([cas, frac]) => `${cas}: ${frac}`)
      .join(", ");
    for (const [field, value] of [
      ["rank", String(recipe.rank)],
      ["recipe_id", recipe.recipe_id],
      ["round", String(recipe.round)],
      ["score", String(recipe.score)],
      ["composition", composition],
    ] as const) {
      const cell = document.createElement("td");
      cell.dataset.field = field;
      cell.textContent = value;
      row.appendChild(cell);
    }
    tbody.appendChild(row);
  }

  const calibrationBox = box.querySelector<HTMLElement>('[data-testid="calibration-block"]')!;
  if (report.calibration) {
    const c = report.calibration;
    const figure = document.createElement("div");
    figure.className = "rmse-figure";
    figure.innerHTML = `
      <div class="stat-value"><span data-testid="rmse-value">${c.rmse_percent_rh}</span>
        <span class="unit">%RH RMSE</span></div>
      <div class="statline">array of <span data-testid="calibration-recipes">${c.recipes.join(
        " + ")}</span></div>
      <div class="statline">held-out grid: ${c.eval_grid.join(", ")} %RH</div>
    `;
    calibrationBox.appendChild(figure);
  } else {
    const note = document.createElement("p");
    note.textContent = "Calibration needs at least two evaluated recipes.";
    calibrationBox.appendChild(note);
  }

  container.appendChild(box);
}
