import type { ApiClient } from "../api.js";
import type { Snapshot } from "../types.js";

export interface IntakeHandlers {
  onCreated(id: string): void;
}

/** Requirement intake plus live pipeline progress for the early stages. */
export function renderIntake(
  container: HTMLElement,
  api: ApiClient,
  snapshot: Snapshot | null,
  handlers: IntakeHandlers,
): void {
  container.replaceChildren();

  if (snapshot === null) {
    const form = document.createElement("form");
    form.dataset.testid = "intake-form";
    form.innerHTML = `
      <h2>New campaign</h2>
      <label>Experimental requirement
        <textarea name="requirement" rows="3" data-testid="requirement-input"
          placeholder="Describe the material you need..."></textarea>
      </label>
      <label>Campaign id (optional)
        <input name="id" data-testid="campaign-id-input" placeholder="auto-generated">
      </label>
      <label>Config overrides (JSON, optional)
        <textarea name="config" rows="3" data-testid="config-input">{}</textarea>
      </label>
      <button type="submit" data-testid="intake-submit">Start campaign</button>
      <div class="error" data-testid="intake-error" hidden></div>
    `;
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const data = new FormData(form);
      const errorBox = form.querySelector<HTMLElement>('[data-testid="intake-error"]')!;
      errorBox.hidden = true;
      try {
        const config = JSON.parse(String(data.get("config") || "{}"));
        const created = await api.createCampaign(
          String(data.get("requirement") || ""),
          String(data.get("id") || "") || undefined,
          config,
        );
        handlers.onCreated(created.id);
      } catch (err) {
        errorBox.textContent = err instanceof Error ? err.message : String(err);
        errorBox.hidden = false;
      }
    });
    container.appendChild(form);
    return;
  }

  const panel = document.createElement("div");
  panel.dataset.testid = "intake-progress";
  const keywordChips = snapshot.keywords
    .map((k) => `<span class="chip" data-testid="keyword-chip">${k}</span>`)
    .join(" ");
  panel.innerHTML = `
    <h2>Campaign ${snapshot.campaign_id}</h2>
    <p class="requirement">${snapshot.requirement}</p>
    <div class="statline">stage <b data-testid="stage-value">${snapshot.stage}</b>
      &middot; version <b>${snapshot.version}</b></div>
    <div class="block">
      <h3>Keywords</h3>
      <div data-testid="keywords">${keywordChips || "<i>not generated yet</i>"}</div>
    </div>
    <div class="block">
      <h3>Retrieval</h3>
      <div data-testid="retrieval-progress">
        articles retrieved: <b data-testid="articles-total">${snapshot.articles_total}</b>,
        above threshold: <b data-testid="articles-selected">${snapshot.articles_selected}</b>
      </div>
    </div>
    <div class="block">
      <h3>Mining</h3>
      <div>candidates mined: <b data-testid="candidates-mined">${snapshot.candidates_mined}</b>,
        highlighted: <b data-testid="candidates-highlighted">${snapshot.candidates_highlighted}</b></div>
    </div>
    <div class="statline">job: ${snapshot.job.status}${snapshot.job.error
      ? ` <span class="error">(${snapshot.job.error})</span>` : ""}</div>
  `;
  container.appendChild(panel);
}
