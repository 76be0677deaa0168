// Nutrition table: one row per detected item plus the service totals row.
// Numbers are shown exactly as the service sent them; the client never
// recomputes totals.

import type { DetectResponse, NutritionFacts } from './api'

const COLUMNS: Array<keyof NutritionFacts> = [
  'calories',
  'total_fat',
  'carbohydrates',
  'protein',
  'sugars',
  'sodium',
]

export const NO_DATA = 'no data'

function factCell(value: number): string {
  return String(value)
}

export function renderNutritionTable(table: HTMLTableElement, resp: DetectResponse): void {
  table.innerHTML = ''
  const head = table.createTHead().insertRow()
  for (const text of ['item', 'conf', 'kcal', 'fat g', 'carbs g', 'protein g', 'sugars g', 'sodium mg']) {
    const th = document.createElement('th')
    th.textContent = text
    head.appendChild(th)
  }

  const body = table.createTBody()
  const factsByLabel = new Map(resp.nutrition.items.map((it) => [it.label, it.facts]))
  const missing = new Set(resp.nutrition.missing)
  for (const det of resp.detections) {
    const row = body.insertRow()
    row.className = 'item-row'
    row.insertCell().textContent = det.label
    row.insertCell().textContent = det.confidence.toFixed(2)
    const facts = factsByLabel.get(det.label)
    if (facts === undefined || missing.has(det.label)) {
      const cell = row.insertCell()
      cell.colSpan = COLUMNS.length
      cell.className = 'no-data'
      cell.textContent = NO_DATA
      continue
    }
    for (const column of COLUMNS) {
      row.insertCell().textContent = factCell(facts[column] as number)
    }
  }

  const totals = body.insertRow()
  totals.className = 'totals-row'
  totals.insertCell().textContent = resp.nutrition.totals.label
  totals.insertCell().textContent = ''
  for (const column of COLUMNS) {
    totals.insertCell().textContent = factCell(resp.nutrition.totals[column] as number)
  }
}
