/** Client-side caption preview, byte-identical to the server's template.
 *
 * The server echoes the caption it actually used in the job result; the UI
 * asserts the preview matches so a template drift can never go unnoticed.
 */

export interface CaptionPoints {
  robot: [number, number];
  start: [number, number];
  end: [number, number];
}

export function buildCaption(objectName: string, pts: CaptionPoints): string {
  const p = (xy: [number, number]) => `( ${xy[0]} , ${xy[1]} )`;
  return (
    `the robotic arm at blue point ${p(pts.robot)} moves to the ${objectName} ` +
    `at red point ${p(pts.start)} , picks it up , and then moves to green point ${p(pts.end)}`
  );
}

export function buildPlainCaption(objectName: string): string {
  return `the robotic arm moves to the ${objectName} , picks it up , and then moves it`;
}

const COORD_RE = /\( (\d+) , (\d+) \)/g;

/** Recover the three coordinate pairs from a caption (inverse of buildCaption). */
export function parseCaption(caption: string): CaptionPoints | null {
  const pairs = [...caption.matchAll(COORD_RE)].map(
    (m) => [parseInt(m[1], 10), parseInt(m[2], 10)] as [number, number],
  );
  if (pairs.length !== 3) return null;
  return { robot: pairs[0], start: pairs[1], end: pairs[2] };
}
