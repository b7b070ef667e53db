/**
 * Mapping between display (CSS pixel) coordinates on the canvas and the
 * canonical 1024x1024 image grid. `scale` is displaySize / canonicalSize.
 */

export const CANONICAL_SIDE = 1024;

export interface CanonicalPoint {
  x: number;
  y: number;
}

export function displayToCanonical(
  displayX: number,
  displayY: number,
  scale: number
): CanonicalPoint {
  return {
    x: Math.min(CANONICAL_SIDE - 1, Math.max(0, Math.floor(displayX / scale))),
    y: Math.min(CANONICAL_SIDE - 1, Math.max(0, Math.floor(displayY / scale))),
  };
}

export function canonicalToDisplay(
  x: number,
  y: number,
  scale: number
): { x: number; y: number } {
  // center of the canonical pixel, so the round trip stays within one pixel
  return { x: (x + 0.5) * scale, y: (y + 0.5) * scale };
}

export function inCanvas(displayX: number, displayY: number, scale: number): boolean {
  const side = CANONICAL_SIDE * scale;
  return displayX >= 0 && displayY >= 0 && displayX < side && displayY < side;
}
