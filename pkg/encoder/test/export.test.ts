import { mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'

import { afterAll, describe, expect, it } from 'vitest'

import { loadEncoder, PixelGridEncoder } from '../src/encoders.js'
import { exportEmbeddings } from '../src/export.js'
import { readEmbeddingFile } from '../src/format.js'
import { decodeImage } from '../src/images.js'
import { parseManifest } from '../src/manifest.js'
import { makePngBuffer, writeFixtureImages } from './fixtures.js'

const dir = mkdtempSync(join(tmpdir(), 'exp-'))
afterAll(() => rmSync(dir, { recursive: true, force: true }))

describe('pixel-grid encoder', () => {
  it('produces width 768 with values in [-0.5, 0.5]', () => {
    writeFileSync(join(dir, 'probe.png'), makePngBuffer(40, 30, 7))
    const enc = loadEncoder('pixel-grid-768')
    const v = enc.encode(decodeImage(join(dir, 'probe.png')))
    expect(v.length).toBe(768)
    for (const x of v) {
      expect(x).toBeGreaterThanOrEqual(-0.5)
      expect(x).toBeLessThanOrEqual(0.5)
    }
  })

  it('is deterministic for the same image', () => {
    writeFileSync(join(dir, 'det.png'), makePngBuffer(33, 17, 8))
    const enc = new PixelGridEncoder(16)
    const a = enc.encode(decodeImage(join(dir, 'det.png')))
    const b = enc.encode(decodeImage(join(dir, 'det.png')))
    expect(Buffer.from(a.buffer).equals(Buffer.from(b.buffer))).toBe(true)
  })

  it('handles images smaller than the grid', () => {
    writeFileSync(join(dir, 'tiny.png'), makePngBuffer(3, 2, 9))
    const v = new PixelGridEncoder(16).encode(decodeImage(join(dir, 'tiny.png')))
    expect(v.length).toBe(768)
    expect(v.every(Number.isFinite)).toBe(true)
  })

  it('rejects unknown encoder names', () => {
    expect(() => loadEncoder('clip-vit-l')).toThrow(/unknown encoder/)
  })
})

describe('export pipeline', () => {
  it('exports aligned files in manifest order', () => {
    const images = writeFixtureImages(dir, 10)
    const manifest = parseManifest({ encoder: 'pixel-grid-768', images })
    const emb = join(dir, 'kb.vrag')
    const meta = join(dir, 'kb.jsonl')
    const result = exportEmbeddings(manifest, emb, meta, { baseDir: dir, warn: () => {} })
    expect(result.written).toBe(10)
    expect(result.dim).toBe(768)
    expect(result.skipped).toHaveLength(0)
    const back = readEmbeddingFile(emb)
    expect(back.count).toBe(10)
    const lines = readFileSync(meta, 'utf-8').trim().split('\n')
    expect(lines).toHaveLength(10)
    lines.forEach((line, i) => {
      expect(JSON.parse(line).id).toBe(images[i].id)
    })
  })

  it('skips unreadable images and keeps alignment', () => {
    const images = writeFixtureImages(dir, 5)
    writeFileSync(join(dir, 'corrupt.png'), Buffer.from('not an image'))
    images.splice(2, 0, {
      path: 'corrupt.png', id: 'fx-corrupt',
      species: 'Tuna', category: 'Tuna', description: 'x',
    })
    const warnings: string[] = []
    const manifest = parseManifest({ encoder: 'pixel-grid-768', images })
    const emb = join(dir, 'skip.vrag')
    const meta = join(dir, 'skip.jsonl')
    const result = exportEmbeddings(manifest, emb, meta, {
      baseDir: dir,
      warn: m => warnings.push(m),
    })
    expect(result.written).toBe(5)
    expect(result.skipped).toEqual([
      { path: 'corrupt.png', id: 'fx-corrupt', reason: expect.stringContaining('corrupt.png') },
    ])
    expect(warnings).toHaveLength(1)
    const back = readEmbeddingFile(emb)
    const lines = readFileSync(meta, 'utf-8').trim().split('\n')
    expect(back.count).toBe(5)
    expect(lines).toHaveLength(5)
    expect(lines.map(l => JSON.parse(l).id)).toEqual(images.filter(i => i.id !== 'fx-corrupt').map(i => i.id))
  })

  it('exports identical bytes on repeated runs', () => {
    const images = writeFixtureImages(dir, 4)
    const manifest = parseManifest({ encoder: 'pixel-grid-768', images })
    const run = (tag: string) => {
      const emb = join(dir, `${tag}.vrag`)
      const meta = join(dir, `${tag}.jsonl`)
      exportEmbeddings(manifest, emb, meta, { baseDir: dir, warn: () => {} })
      return [readFileSync(emb), readFileSync(meta)] as const
    }
    const [e1, m1] = run('r1')
    const [e2, m2] = run('r2')
    expect(e1.equals(e2)).toBe(true)
    expect(m1.equals(m2)).toBe(true)
  })

  it('rejects manifests with duplicate ids', () => {
    expect(() =>
      parseManifest({
        encoder: 'pixel-grid-768',
        images: [
          { path: 'a.png', id: 'x' },
          { path: 'b.png', id: 'x' },
        ],
      }),
    ).toThrow(/duplicate id/)
  })
})
