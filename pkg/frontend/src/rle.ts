/**
 * Run-length mask codec matching the segmentation service wire format:
 * alternating run lengths in row-major order, starting with a background run.
 */

export function decodeRle(runs: number[], width: number, height: number): Uint8Array {
  const total = width * height;
  let sum = 0;
  for (const r of runs) {
    if (r < 0 || !Number.isInteger(r)) {
      throw new Error(`invalid run length ${r}`);
    }
    sum += r;
  }
  if (sum !== total) {
    throw new Error(`run lengths sum to ${sum}, expected ${total}`);
  }
  const mask = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const r of runs) {
    if (value) {
      mask.fill(1, pos, pos + r);
    }
    pos += r;
    value = 1 - value;
  }
  return mask;
}

export function encodeRle(mask: Uint8Array): number[] {
  const runs: number[] = [];
  let current = 0;
  let length = 0;
  for (const v of mask) {
    const bit = v ? 1 : 0;
    if (bit === current) {
      length++;
    } else {
      runs.push(length);
      current = bit;
      length = 1;
    }
  }
  runs.push(length);
  return runs;
}
