export { decodePpm, type Image } from "./ppm.js";
export {
  CONCEPTS,
  N_CONCEPTS,
  conceptScores,
  hsvBinIndex,
  loadConceptModel,
  type ConceptModel,
} from "./concepts.js";
export { fmtFloat, writeFdesc, writeLdesc } from "./format.js";
export { LOCAL_DESCRIPTOR_DIM, localDescriptors } from "./local.js";
export { extract, type ExtractionJob, type ExtractionSummary } from "./extract.js";
