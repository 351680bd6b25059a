/**
 * The one formatting helper. Every number the chart or table shows goes
 * through here, so what appears on screen is always a service payload
 * value at fixed precision, never a client-side recomputation.
 */
export const DISPLAY_DECIMALS = 4;

export function formatValue(x: number, decimals: number = DISPLAY_DECIMALS): string {
  if (!Number.isFinite(x)) return 'n/a';
  let text = x.toFixed(decimals);
  // a tiny negative rounding to zero should not read as "-0.0000"
  if (Number(text) === 0) text = (0).toFixed(decimals);
  return text;
}
