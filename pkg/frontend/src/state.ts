// UI state and the single-flight request queue.
//
// At most one detect request is in flight; a submission made while one is
// running replaces any queued submission (latest wins), so rapid slider
// changes settle on the newest thresholds deterministically.

import { DetectResponse, ServiceError, Thresholds, detectImage } from './api'

export interface UiState {
  selectedImage: Blob | null
  lastResponse: DetectResponse | null
  confThreshold: number
  nmsThreshold: number
  errorBanner: string | null
}

export function initialState(): UiState {
  return {
    selectedImage: null,
    lastResponse: null,
    confThreshold: 0.4,
    nmsThreshold: 0.3,
    errorBanner: null,
  }
}

const THRESHOLD_MIN = 0.01
const THRESHOLD_MAX = 0.99

export function clampThreshold(value: number): number {
  if (Number.isNaN(value)) return THRESHOLD_MIN
  return Math.min(THRESHOLD_MAX, Math.max(THRESHOLD_MIN, value))
}

export function setThresholds(state: UiState, conf: number, nms: number): UiState {
  return { ...state, confThreshold: clampThreshold(conf), nmsThreshold: clampThreshold(nms) }
}

export function selectImage(state: UiState, image: Blob): UiState {
  return { ...state, selectedImage: image }
}

// A successful response replaces the rendered result and clears the banner.
export function applyResponse(state: UiState, resp: DetectResponse): UiState {
  return { ...state, lastResponse: resp, errorBanner: null }
}

// Failures keep the previous result on screen and raise the banner.
export function applyError(state: UiState, message: string): UiState {
  return { ...state, errorBanner: message }
}

interface PendingRequest {
  image: Blob
  thresholds: Thresholds
}

export class DetectQueue {
  private inFlight = false
  private queued: PendingRequest | null = null

  constructor(
    private baseUrl: string,
    private onResult: (resp: DetectResponse) => void,
    private onError: (message: string) => void,
    private transport: typeof detectImage = detectImage,
  ) {}

  submit(image: Blob, thresholds: Thresholds): void {
    if (this.inFlight) {
      this.queued = { image, thresholds }
      return
    }
    void this.run({ image, thresholds })
  }

  // resolves when the queue drains (useful for tests)
  async idle(): Promise<void> {
    while (this.inFlight) {
      await new Promise((r) => setTimeout(r, 1))
    }
  }

  private async run(request: PendingRequest): Promise<void> {
    this.inFlight = true
    let current: PendingRequest | null = request
    while (current) {
      try {
        const resp = await this.transport(this.baseUrl, current.image, current.thresholds)
        this.onResult(resp)
      } catch (err) {
        this.onError(err instanceof ServiceError ? err.message : `unexpected failure: ${err}`)
      }
      current = this.queued
      this.queued = null
    }
    this.inFlight = false
  }
}
