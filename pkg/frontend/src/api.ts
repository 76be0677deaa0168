// Typed client for the /v1 detection endpoints.

export interface PixelBox {
  x: number
  y: number
  width: number
  height: number
}

export interface DetectionItem {
  box: PixelBox
  label: string
  class_id: number
  confidence: number
}

export interface NutritionFacts {
  label: string
  serving_qty: number
  serving_unit: string
  calories: number
  total_fat: number
  carbohydrates: number
  protein: number
  sugars: number
  sodium: number
}

export interface NutritionItem {
  label: string
  confidence: number
  facts: NutritionFacts
}

export interface DetectResponse {
  detections: DetectionItem[]
  image: { width: number; height: number }
  nutrition: {
    items: NutritionItem[]
    totals: NutritionFacts
    missing: string[]
  }
}

export interface Thresholds {
  conf: number
  nms: number
}

export class ServiceError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message)
  }
}

export async function detectImage(
  baseUrl: string,
  image: Blob,
  thresholds: Thresholds,
): Promise<DetectResponse> {
  const params = new URLSearchParams({
    conf_threshold: thresholds.conf.toString(),
    nms_threshold: thresholds.nms.toString(),
  })
  let resp: Response
  try {
    resp = await fetch(`${baseUrl}/v1/detect?${params}`, { method: 'POST', body: image })
  } catch (err) {
    throw new ServiceError(`service unreachable: ${err}`)
  }
  if (!resp.ok) {
    let detail = resp.statusText
    try {
      const doc = await resp.json()
      if (doc && typeof doc.error === 'string') detail = doc.error
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ServiceError(`detect failed (${resp.status}): ${detail}`, resp.status)
  }
  return (await resp.json()) as DetectResponse
}

export async function fetchLabels(baseUrl: string): Promise<string[]> {
  const resp = await fetch(`${baseUrl}/v1/labels`)
  if (!resp.ok) throw new ServiceError(`labels failed (${resp.status})`, resp.status)
  return (await resp.json()).labels as string[]
}
