import { ApiRequestError, type ApiClient } from "../api.js";
import type { CandidateEntry, CandidatesPayload } from "../types.js";

const ROLES = ["colorant", "additive", "solvent", "reactor", "adjuster"];

export type SortKey = "name" | "cas" | "role" | "relevance";

export interface CandidatesViewState {
  sortKey: SortKey;
  sortAsc: boolean;
  checked: Set<string>;
  roleChoices: Map<string, string>;
}

export function initialCandidatesState(): CandidatesViewState {
  return { sortKey: "relevance", sortAsc: false, checked: new Set(), roleChoices: new Map() };
}

export interface CandidatesHandlers {
  onSubmitted(): void;
  rerender(): void;
}

function sorted(entries: CandidateEntry[], state: CandidatesViewState): CandidateEntry[] {
  const out = [...entries];
  out.sort((a, b) => {
    const va = a[state.sortKey];
    const vb = b[state.sortKey];
    const cmp = typeof va === "number" && typeof vb === "number"
      ? va - vb
      : String(va).localeCompare(String(vb));
    return state.sortAsc ? cmp : -cmp;
  });
  return out;
}

/** Sortable candidate table with checkbox selection and role assignment. */
export function renderCandidates(
  container: HTMLElement,
  api: ApiClient,
  campaignId: string,
  payload: CandidatesPayload,
  state: CandidatesViewState,
  handlers: CandidatesHandlers,
): void {
  container.replaceChildren();
  const box = document.createElement("div");
  box.innerHTML = `
    <h2>Mined candidates</h2>
    <p>
      <span data-testid="candidate-count">${payload.entries.length}</span> candidates at or
      above threshold <span data-testid="threshold">${payload.threshold}</span>
      (of <span data-testid="total-mined">${payload.total_mined}</span> mined).
      Pick the reagents for the mixture: at least one colorant and exactly one solvent.
    </p>
    <table class="candidates" data-testid="candidates-table">
      <thead><tr>
        <th></th>
        <th data-sort="name">name</th>
        <th data-sort="cas">CAS</th>
        <th data-sort="role">role</th>
        <th>purpose</th>
        <th data-sort="relevance">relevance (0-1)</th>
        <th>sources</th>
        <th>assigned role</th>
      </tr></thead>
      <tbody></tbody>
    </table>
    <div class="toolbar">
      <button data-testid="submit-selection">Submit selection</button>
      <span data-testid="selection-count"></span>
    </div>
    <div class="error" data-testid="selection-error" hidden></div>
  `;

  const tbody = box.querySelector("tbody")!;
  for (const entry of sorted(payload.entries, state)) {
    const row = document.createElement("tr");
    row.dataset.testid = "candidate-row";
    row.dataset.cas = entry.cas;

    const checkCell = document.createElement("td");
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.dataset.testid = "candidate-check";
    checkbox.checked = state.checked.has(entry.cas);
    checkbox.addEventListener("change", () => {
      if (checkbox.checked) state.checked.add(entry.cas);
      else state.checked.delete(entry.cas);
      box.querySelector('[data-testid="selection-count"]')!.textContent =
        `${state.checked.size} selected`;
    });
    checkCell.appendChild(checkbox);
    row.appendChild(checkCell);

    for (const [field, value] of [
      ["name", entry.name],
      ["cas", entry.cas],
      ["role", entry.role],
      ["purpose", entry.purpose],
      ["relevance", String(entry.relevance)],
      ["sources", entry.sources.join(", ")],
    ] as const) {
      const cell = document.createElement("td");
      cell.dataset.field = field;
      cell.textContent = value;
      row.appendChild(cell);
    }

    const roleCell = document.createElement("td");
    const select = document.createElement("select");
    select.dataset.testid = "role-select";
    for (const role of ROLES) {
      const option = document.createElement("option");
      option.value = role;
      option.textContent = role;
      select.appendChild(option);
    }
    select.value = state.roleChoices.get(entry.cas) ?? entry.role;
    select.addEventListener("change", () => state.roleChoices.set(entry.cas, select.value));
    roleCell.appendChild(select);
    row.appendChild(roleCell);

    tbody.appendChild(row);
  }

  for (const th of box.querySelectorAll<HTMLElement>("th[data-sort]")) {
    th.style.cursor = "pointer";
    th.addEventListener("click", () => {
      const key = th.dataset.sort as SortKey;
      state.sortAsc = state.sortKey === key ? !state.sortAsc : key === "name";
      state.sortKey = key;
      handlers.rerender();
    });
  }

  box.querySelector('[data-testid="selection-count"]')!.textContent =
    `${state.checked.size} selected`;

  box.querySelector('[data-testid="submit-selection"]')!.addEventListener("click", async () => {
    const errorBox = box.querySelector<HTMLElement>('[data-testid="selection-error"]')!;
    errorBox.hidden = true;
    const selections = [...state.checked].map((cas) => {
      const mined = payload.entries.find((e) => e.cas === cas);
      return { cas, role: state.roleChoices.get(cas) ?? mined?.role ?? "additive" };
    });
    try {
      await api.submitSelection(campaignId, selections);
      handlers.onSubmitted();
    } catch (err) {
      if (err instanceof ApiRequestError) {
        errorBox.textContent = `${err.code}: ${err.message}`;
      } else {
        errorBox.textContent = err instanceof Error ? err.message : String(err);
      }
      errorBox.hidden = false;
    }
  });

  container.appendChild(box);
}
