/** Export pipeline: manifest -> embedding file + metadata JSONL.
 *
 * Unreadable images are skipped with a warning and excluded from BOTH
 * output files, so row i always pairs with metadata line i. Output row
 * order follows manifest order.
 */

import { dirname, resolve } from 'node:path'

import { loadEncoder } from './encoders.js'
import { writeEmbeddingFile, writeMetadataFile, type MetadataRecord } from './format.js'
import { decodeImage, UnreadableImage } from './images.js'
import type { ExportManifest } from './manifest.js'

export interface SkippedImage {
  path: string
  id: string
  reason: string
}

export interface ExportResult {
  written: number
  dim: number
  encoder: string
  encoderVersion: string
  preprocessing: string
  skipped: SkippedImage[]
}

export interface ExportOptions {
  /** Base directory for relative image paths (default: cwd). */
  baseDir?: string
  /** Warning sink for skipped images (default: console.warn). */
  warn?: (message: string) => void
}

export function exportEmbeddings(
  manifest: ExportManifest,
  outEmbeddings: string,
  outMetadata: string,
  options: ExportOptions = {},
): ExportResult {
  const warn = options.warn ?? ((msg: string) => console.warn(msg))
  const baseDir = options.baseDir ?? process.cwd()
  const encoder = loadEncoder(manifest.encoder)
  const rows: Float32Array[] = []
  const records: MetadataRecord[] = []
  const skipped: SkippedImage[] = []
  for (const img of manifest.images) {
    const fullPath = resolve(baseDir, img.path)
    let pixels
    try {
      pixels = decodeImage(fullPath)
    } catch (err) {
      if (err instanceof UnreadableImage) {
        warn(`skipping ${img.path} (${img.id}): ${err.message}`)
        skipped.push({ path: img.path, id: img.id, reason: err.message })
        continue
      }
      throw err
    }
    rows.push(encoder.encode(pixels))
    records.push({
      id: img.id,
      species: img.species,
      category: img.category,
      description: img.description,
    })
  }
  writeEmbeddingFile(outEmbeddings, rows, encoder.dim)
  writeMetadataFile(outMetadata, records)
  return {
    written: rows.length,
    dim: encoder.dim,
    encoder: encoder.name,
    encoderVersion: encoder.version,
    preprocessing: encoder.preprocessing,
    skipped,
  }
}

export function manifestBaseDir(manifestPath: string): string {
  return dirname(resolve(manifestPath))
}
