/** Test fixtures: deterministic synthetic PNGs. */

import { writeFileSync } from 'node:fs'
import { join } from 'node:path'

import { PNG } from 'pngjs'

/** Tiny deterministic PRNG (mulberry32) so fixtures never vary. */
export function rng(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

export function makePngBuffer(width: number, height: number, seed: number): Buffer {
  const png = new PNG({ width, height })
  const rand = rng(seed)
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const p = (y * width + x) * 4
      png.data[p] = Math.floor(rand() * 256)
      png.data[p + 1] = Math.floor(rand() * 256)
      png.data[p + 2] = Math.floor(rand() * 256)
      png.data[p + 3] = 255
    }
  }
  return PNG.sync.write(png)
}

export interface FixtureImage {
  path: string
  id: string
  species: string
  category: string
  description: string
}

const LABELS: Array<[string, string]> = [
  ['Tuna', 'Tuna'],
  ['Shark', 'Shark'],
  ['Opah', 'Opah'],
  ['Billfish', 'Billfish'],
  ['Mahi mahi', 'Mahi mahi'],
]

/** Write n distinct PNGs into dir; returns manifest-ready entries. */
export function writeFixtureImages(dir: string, n: number, size = 24): FixtureImage[] {
  const images: FixtureImage[] = []
  for (let i = 0; i < n; i++) {
    const name = `img-${String(i).padStart(3, '0')}.png`
    writeFileSync(join(dir, name), makePngBuffer(size, size, 1000 + i))
    const [species, category] = LABELS[i % LABELS.length]
    images.push({
      path: name,
      id: `fx-${String(i).padStart(3, '0')}`,
      species,
      category,
      description: `reference specimen ${i}`,
    })
  }
  return images
}
