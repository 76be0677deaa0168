// Box overlay geometry and rendering (positioned divs over the photo).

import type { DetectResponse } from './api'

export interface DisplayBox {
  x: number
  y: number
  width: number
  height: number
  caption: string
}

export interface DisplaySize {
  width: number
  height: number
}

// The photo is shown at its response aspect ratio, capped at maxWidth.
export function displaySize(resp: DetectResponse, maxWidth: number): DisplaySize {
  const scale = Math.min(1, maxWidth / resp.image.width)
  return { width: resp.image.width * scale, height: resp.image.height * scale }
}

export function caption(label: string, confidence: number): string {
  return `${label} ${confidence.toFixed(2)}`
}

// Response pixel boxes scaled by the display ratio.
export function scaleForDisplay(resp: DetectResponse, display: DisplaySize): DisplayBox[] {
  const rx = display.width / resp.image.width
  const ry = display.height / resp.image.height
  return resp.detections.map((d) => ({
    x: d.box.x * rx,
    y: d.box.y * ry,
    width: d.box.width * rx,
    height: d.box.height * ry,
    caption: caption(d.label, d.confidence),
  }))
}

export function renderOverlay(container: HTMLElement, boxes: DisplayBox[]): void {
  container.querySelectorAll('.det-box').forEach((el) => el.remove())
  for (const box of boxes) {
    const el = document.createElement('div')
    el.className = 'det-box'
    el.style.position = 'absolute'
    el.style.left = `${box.x}px`
    el.style.top = `${box.y}px`
    el.style.width = `${box.width}px`
    el.style.height = `${box.height}px`
    const tag = document.createElement('span')
    tag.className = 'det-caption'
    tag.textContent = box.caption
    el.appendChild(tag)
    container.appendChild(el)
  }
}
