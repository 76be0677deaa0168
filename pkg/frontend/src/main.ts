// Page wiring: file picker, threshold sliders, overlay and table rendering.

import { DetectResponse } from './api'
import { renderNutritionTable } from './nutrition-table'
import { displaySize, renderOverlay, scaleForDisplay } from './overlay'
import {
  DetectQueue,
  UiState,
  applyError,
  applyResponse,
  initialState,
  selectImage,
  setThresholds,
} from './state'

const MAX_DISPLAY_WIDTH = 560

export function setup(root: Document, baseUrl: string): { rerun: () => void } {
  const fileInput = root.getElementById('photo') as HTMLInputElement
  const confSlider = root.getElementById('conf') as HTMLInputElement
  const nmsSlider = root.getElementById('nms') as HTMLInputElement
  const confValue = root.getElementById('conf-value') as HTMLElement
  const nmsValue = root.getElementById('nms-value') as HTMLElement
  const banner = root.getElementById('banner') as HTMLElement
  const frame = root.getElementById('frame') as HTMLElement
  const photoView = root.getElementById('photo-view') as HTMLImageElement
  const table = root.getElementById('nutrition') as HTMLTableElement

  let state: UiState = initialState()

  const queue = new DetectQueue(
    baseUrl,
    (resp) => {
      state = applyResponse(state, resp)
      render(resp)
    },
    (message) => {
      state = applyError(state, message)
      banner.textContent = message
      banner.hidden = false
    },
  )

  function render(resp: DetectResponse): void {
    banner.hidden = true
    banner.textContent = ''
    const size = displaySize(resp, MAX_DISPLAY_WIDTH)
    frame.style.width = `${size.width}px`
    frame.style.height = `${size.height}px`
    renderOverlay(frame, scaleForDisplay(resp, size))
    renderNutritionTable(table, resp)
  }

  function submit(): void {
    if (!state.selectedImage) return
    queue.submit(state.selectedImage, {
      conf: state.confThreshold,
      nms: state.nmsThreshold,
    })
  }

  fileInput.addEventListener('change', () => {
    const file = fileInput.files?.[0]
    if (!file) return
    state = selectImage(state, file)
    photoView.src = URL.createObjectURL(file)
    submit()
  })

  const onThresholds = () => {
    state = setThresholds(state, Number(confSlider.value), Number(nmsSlider.value))
    confValue.textContent = state.confThreshold.toFixed(2)
    nmsValue.textContent = state.nmsThreshold.toFixed(2)
    submit()
  }
  confSlider.addEventListener('change', onThresholds)
  nmsSlider.addEventListener('change', onThresholds)

  return { rerun: submit }
}

declare global {
  interface Window {
    FOODSPOT_SERVICE_URL?: string
  }
}

if (typeof window !== 'undefined' && typeof document !== 'undefined' && document.getElementById('photo')) {
  setup(document, window.FOODSPOT_SERVICE_URL ?? 'http://127.0.0.1:8157')
}
