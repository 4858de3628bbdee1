/** Display formatting shared by the grids and the tree explorer. */

/** Compact week/day rendering, e.g. 15 days -> "2w, 1d". */
export function formatDurationDays(days: number): string {
  if (days < 0) return `-${formatDurationDays(-days)}`;
  const weeks = Math.floor(days / 7);
  const rest = days - 7 * weeks;
  const restStr = trimNumber(rest);
  if (weeks === 0) return `${restStr}d`;
  if (restStr === "0") return `${weeks}w`;
  return `${weeks}w, ${restStr}d`;
}

function trimNumber(value: number): string {
  return value
    .toFixed(2)
    .replace(/0+$/, "")
    .replace(/\.$/, "");
}

export function formatCents(cents: number | null): string {
  if (cents === null) return "?";
  return `$${(cents / 100).toLocaleString("en-US", {
    maximumFractionDigits: 0,
  })}`;
}

export function formatLeadHours(hours: number | null): string {
  if (hours === null) return "?";
  return formatDurationDays(hours / 24);
}

export function formatPercent(percent: number | null): string {
  if (percent === null) return "";
  return `${percent.toFixed(2)}%`;
}

export function formatMassKg(kg: number): string {
  return kg < 1 ? `${(kg * 1000).toFixed(0)} g` : `${kg.toFixed(2)} kg`;
}
