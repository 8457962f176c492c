/** Display formatting. Numbers shown to the operator are the stream-frame
 * values verbatim (String of the received double) so nothing on screen is
 * a client-side recomputation; rounding happens only on chart axes. */

export function displayNumber(value: number | null | undefined): string {
  if (value === null || value === undefined) {
    return "n/a";
  }
  return String(value);
}

export function axisLabel(value: number): string {
  return value.toFixed(2);
}
