/** Export manifest: which images, under which ids and labels, through
 * which encoder. Image paths resolve relative to the manifest file. */

import { readFileSync } from 'node:fs'

export interface ManifestImage {
  path: string
  id: string
  species?: string
  category?: string
  description?: string
}

export interface ExportManifest {
  encoder: string
  images: ManifestImage[]
}

export class ManifestError extends Error {}

export function parseManifest(data: unknown): ExportManifest {
  if (typeof data !== 'object' || data === null) {
    throw new ManifestError('manifest must be a JSON object')
  }
  const obj = data as Record<string, unknown>
  if (typeof obj.encoder !== 'string' || !obj.encoder) {
    throw new ManifestError("manifest needs an 'encoder' name")
  }
  if (!Array.isArray(obj.images) || obj.images.length === 0) {
    throw new ManifestError("manifest needs a non-empty 'images' array")
  }
  const seen = new Set<string>()
  const images: ManifestImage[] = obj.images.map((raw, i) => {
    if (typeof raw !== 'object' || raw === null) {
      throw new ManifestError(`images[${i}] must be an object`)
    }
    const img = raw as Record<string, unknown>
    if (typeof img.path !== 'string' || !img.path) {
      throw new ManifestError(`images[${i}] needs a 'path'`)
    }
    if (typeof img.id !== 'string' || !img.id) {
      throw new ManifestError(`images[${i}] needs an 'id'`)
    }
    if (seen.has(img.id)) {
      throw new ManifestError(`duplicate id ${JSON.stringify(img.id)}`)
    }
    seen.add(img.id)
    for (const key of ['species', 'category', 'description'] as const) {
      if (img[key] !== undefined && typeof img[key] !== 'string') {
        throw new ManifestError(`images[${i}].${key} must be a string`)
      }
    }
    return {
      path: img.path,
      id: img.id,
      species: img.species as string | undefined,
      category: img.category as string | undefined,
      description: img.description as string | undefined,
    }
  })
  return { encoder: obj.encoder, images }
}

export function loadManifest(path: string): ExportManifest {
  let text: string
  try {
    text = readFileSync(path, 'utf-8')
  } catch (err) {
    throw new ManifestError(`cannot read ${path}: ${(err as Error).message}`)
  }
  let data: unknown
  try {
    data = JSON.parse(text)
  } catch (err) {
    throw new ManifestError(`${path}: invalid JSON: ${(err as Error).message}`)
  }
  return parseManifest(data)
}
