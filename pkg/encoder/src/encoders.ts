/**
 * Image encoders behind one interface.
 *
 * The built-in pixel-grid encoder is fully deterministic (pure IEEE
 * arithmetic, no weights to download): it mean-pools RGB over a fixed
 * 16x16 grid, giving width 16*16*3 = 768, the same width as common
 * large contrastive encoders, so stores built from it exercise the exact
 * production shapes. Swap in a real encoder by registering another
 * implementation of Encoder.
 */

import type { ImagePixels } from './images.js'

export class EncoderLoadError extends Error {}

export interface Encoder {
  readonly name: string
  readonly version: string
  readonly dim: number
  /** Human-readable preprocessing summary, pinned into run manifests. */
  readonly preprocessing: string
  encode(image: ImagePixels): Float32Array
}

export class PixelGridEncoder implements Encoder {
  readonly grid: number
  readonly name: string
  readonly version = '1'
  readonly dim: number
  readonly preprocessing: string

  constructor(grid = 16) {
    this.grid = grid
    this.dim = grid * grid * 3
    this.name = `pixel-grid-${this.dim}`
    this.preprocessing = `RGB mean-pool over a ${grid}x${grid} grid, scaled to [0,1], centered at 0.5`
  }

  encode(image: ImagePixels): Float32Array {
    const { width, height, rgba } = image
    if (width < 1 || height < 1 || rgba.length < width * height * 4) {
      throw new EncoderLoadError('image has no pixels')
    }
    const g = this.grid
    const out = new Float32Array(this.dim)
    for (let cy = 0; cy < g; cy++) {
      // cell pixel ranges; tiny images fall back to the nearest pixel
      let y0 = Math.floor((cy * height) / g)
      let y1 = Math.floor(((cy + 1) * height) / g)
      if (y1 <= y0) y1 = Math.min(y0 + 1, height)
      if (y0 >= height) y0 = height - 1
      for (let cx = 0; cx < g; cx++) {
        let x0 = Math.floor((cx * width) / g)
        let x1 = Math.floor(((cx + 1) * width) / g)
        if (x1 <= x0) x1 = Math.min(x0 + 1, width)
        if (x0 >= width) x0 = width - 1
        let r = 0
        let gr = 0
        let b = 0
        let n = 0
        for (let y = y0; y < Math.max(y1, y0 + 1); y++) {
          for (let x = x0; x < Math.max(x1, x0 + 1); x++) {
            const p = (y * width + x) * 4
            r += rgba[p]
            gr += rgba[p + 1]
            b += rgba[p + 2]
            n += 1
          }
        }
        const base = (cy * g + cx) * 3
        out[base] = r / n / 255 - 0.5
        out[base + 1] = gr / n / 255 - 0.5
        out[base + 2] = b / n / 255 - 0.5
      }
    }
    return out
  }
}

const REGISTRY: Record<string, () => Encoder> = {
  'pixel-grid-768': () => new PixelGridEncoder(16),
  'pixel-grid-192': () => new PixelGridEncoder(8),
}

export function loadEncoder(name: string): Encoder {
  const factory = REGISTRY[name]
  if (!factory) {
    throw new EncoderLoadError(
      `unknown encoder ${JSON.stringify(name)}; available: ${Object.keys(REGISTRY).join(', ')}`,
    )
  }
  return factory()
}

export function availableEncoders(): string[] {
  return Object.keys(REGISTRY)
}
