/** PNG/JPEG decoding to RGBA pixels. Anything undecodable raises
 * UnreadableImage so the export pipeline can skip it and keep row/line
 * alignment. */

import { readFileSync } from 'node:fs'
import jpeg from 'jpeg-js'
import { PNG } from 'pngjs'

export class UnreadableImage extends Error {}

export interface ImagePixels {
  width: number
  height: number
  rgba: Uint8Array
}

export function decodeImage(path: string): ImagePixels {
  let buf: Buffer
  try {
    buf = readFileSync(path)
  } catch (err) {
    throw new UnreadableImage(`${path}: ${(err as Error).message}`)
  }
  const isPng = buf.length >= 8 && buf.readUInt32BE(0) === 0x89504e47
  const isJpeg = buf.length >= 2 && buf[0] === 0xff && buf[1] === 0xd8
  try {
    if (isPng) {
      const png = PNG.sync.read(buf)
      return { width: png.width, height: png.height, rgba: new Uint8Array(png.data) }
    }
    if (isJpeg) {
      const img = jpeg.decode(buf, { useTArray: true, formatAsRGBA: true })
      return { width: img.width, height: img.height, rgba: new Uint8Array(img.data) }
    }
  } catch (err) {
    throw new UnreadableImage(`${path}: ${(err as Error).message}`)
  }
  throw new UnreadableImage(`${path}: not a PNG or JPEG`)
}
