/** Binary PPM (P6, maxval 255) decoding. */

export interface Image {
  width: number;
  height: number;
  /** Row-major RGB triples, height * width * 3 bytes. */
  data: Uint8Array;
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0c || byte === 0x0b;
}

export function decodePpm(data: Uint8Array): Image {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x36) {
    throw new Error("only binary PPM (P6) images are supported");
  }
  const fields: number[] = [];
  let pos = 2;
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) pos += 1;
    if (data[pos] === 0x23) {
      // comment: skip to end of line
      while (pos < data.length && data[pos] !== 0x0a) pos += 1;
      continue;
    }
    const start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos += 1;
    const field = Number.parseInt(Buffer.from(data.slice(start, pos)).toString("ascii"), 10);
    if (!Number.isFinite(field)) throw new Error("malformed PPM header");
    fields.push(field);
  }
  pos += 1; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) {
    throw new Error("only maxval 255 PPM images are supported");
  }
  const expected = width * height * 3;
  if (data.length - pos < expected) {
    throw new Error("truncated PPM pixel data");
  }
  return { width, height, data: data.slice(pos, pos + expected) };
}
