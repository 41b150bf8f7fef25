/**
 * Binary embedding file and metadata JSONL writers, matching the visrag
 * ingestion formats exactly.
 *
 * Embedding file (little-endian): magic "VRAG", uint16 version (1),
 * uint32 dim, uint64 count, then count*dim float32 row-major. Byte length
 * is exactly 18 + 4*dim*count.
 */

import { writeFileSync, readFileSync } from 'node:fs'

export const MAGIC = 'VRAG'
export const VERSION = 1
export const HEADER_SIZE = 18

export interface MetadataRecord {
  id: string
  species?: string
  category?: string
  description?: string
}

export function encodeEmbeddingFile(rows: Float32Array[], dim: number): Buffer {
  for (const [i, row] of rows.entries()) {
    if (row.length !== dim) {
      throw new Error(`row ${i} has dim ${row.length}, expected ${dim}`)
    }
    for (const v of row) {
      if (!Number.isFinite(v)) throw new Error(`row ${i} contains a non-finite value`)
    }
  }
  const buf = Buffer.alloc(HEADER_SIZE + 4 * dim * rows.length)
  buf.write(MAGIC, 0, 'ascii')
  buf.writeUInt16LE(VERSION, 4)
  buf.writeUInt32LE(dim, 6)
  buf.writeBigUInt64LE(BigInt(rows.length), 10)
  let off = HEADER_SIZE
  for (const row of rows) {
    for (const v of row) {
      buf.writeFloatLE(v, off)
      off += 4
    }
  }
  return buf
}

export function writeEmbeddingFile(path: string, rows: Float32Array[], dim: number): void {
  writeFileSync(path, encodeEmbeddingFile(rows, dim))
}

/** Reader used by tests to verify what was written round-trips. */
export function readEmbeddingFile(path: string): { dim: number; count: number; rows: Float32Array[] } {
  const buf = readFileSync(path)
  if (buf.length < HEADER_SIZE) throw new Error('truncated header')
  if (buf.toString('ascii', 0, 4) !== MAGIC) throw new Error('bad magic')
  if (buf.readUInt16LE(4) !== VERSION) throw new Error('unsupported version')
  const dim = buf.readUInt32LE(6)
  const count = Number(buf.readBigUInt64LE(10))
  if (buf.length !== HEADER_SIZE + 4 * dim * count) throw new Error('bad length')
  const rows: Float32Array[] = []
  let off = HEADER_SIZE
  for (let i = 0; i < count; i++) {
    const row = new Float32Array(dim)
    for (let j = 0; j < dim; j++) {
      row[j] = buf.readFloatLE(off)
      off += 4
    }
    rows.push(row)
  }
  return { dim, count, rows }
}

const METADATA_KEYS = ['id', 'species', 'category', 'description'] as const

export function writeMetadataFile(path: string, records: MetadataRecord[]): void {
  const lines = records.map(rec => {
    const ordered: Record<string, string> = {}
    for (const key of METADATA_KEYS) {
      const value = rec[key]
      if (value !== undefined) ordered[key] = value
    }
    return JSON.stringify(ordered)
  })
  writeFileSync(path, lines.length ? lines.join('\n') + '\n' : '')
}
