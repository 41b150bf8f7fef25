export { availableEncoders, EncoderLoadError, loadEncoder, PixelGridEncoder } from './encoders.js'
export type { Encoder } from './encoders.js'
export { exportEmbeddings, manifestBaseDir } from './export.js'
export type { ExportOptions, ExportResult, SkippedImage } from './export.js'
export {
  encodeEmbeddingFile,
  HEADER_SIZE,
  MAGIC,
  readEmbeddingFile,
  VERSION,
  writeEmbeddingFile,
  writeMetadataFile,
} from './format.js'
export type { MetadataRecord } from './format.js'
export { decodeImage, UnreadableImage } from './images.js'
export type { ImagePixels } from './images.js'
export { loadManifest, ManifestError, parseManifest } from './manifest.js'
export type { ExportManifest, ManifestImage } from './manifest.js'
