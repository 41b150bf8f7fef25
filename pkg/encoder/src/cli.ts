#!/usr/bin/env node
/** Command line: export an image manifest to embedding + metadata files.
 *
 *   visrag-encoder-export --manifest m.json \
 *       --out-embeddings kb.vrag --out-metadata kb.jsonl
 */

import { resolve } from 'node:path'
import { fileURLToPath } from 'node:url'
import { parseArgs } from 'node:util'

import { EncoderLoadError, availableEncoders } from './encoders.js'
import { exportEmbeddings, manifestBaseDir } from './export.js'
import { ManifestError, loadManifest } from './manifest.js'

function usage(): string {
  return [
    'usage: visrag-encoder-export --manifest <file.json> --out-embeddings <file.vrag> --out-metadata <file.jsonl> [--encoder <name>]',
    '',
    `encoders: ${availableEncoders().join(', ')}`,
    'Image paths in the manifest resolve relative to the manifest file.',
  ].join('\n')
}

export function main(argv: string[]): number {
  let values
  try {
    ;({ values } = parseArgs({
      args: argv,
      options: {
        manifest: { type: 'string' },
        'out-embeddings': { type: 'string' },
        'out-metadata': { type: 'string' },
        encoder: { type: 'string' },
        help: { type: 'boolean', short: 'h' },
      },
    }))
  } catch (err) {
    console.error((err as Error).message)
    console.error(usage())
    return 2
  }
  if (values.help) {
    console.log(usage())
    return 0
  }
  const manifestPath = values.manifest
  const outEmbeddings = values['out-embeddings']
  const outMetadata = values['out-metadata']
  if (!manifestPath || !outEmbeddings || !outMetadata) {
    console.error(usage())
    return 2
  }
  try {
    const manifest = loadManifest(manifestPath)
    if (values.encoder) manifest.encoder = values.encoder
    const result = exportEmbeddings(manifest, outEmbeddings, outMetadata, {
      baseDir: manifestBaseDir(manifestPath),
    })
    console.log(
      `exported ${result.written} embeddings (dim ${result.dim}, encoder ` +
        `${result.encoder} v${result.encoderVersion}); skipped ${result.skipped.length}`,
    )
    return 0
  } catch (err) {
    if (err instanceof ManifestError || err instanceof EncoderLoadError) {
      console.error((err as Error).message)
      return 3
    }
    console.error((err as Error).message)
    return 1
  }
}

if (process.argv[1] && fileURLToPath(import.meta.url) === resolve(process.argv[1])) {
  process.exit(main(process.argv.slice(2)))
}
