/** Line-level diff for the side-by-side proposal view. Documents here are a
 * few dozen lines, so a plain LCS table is plenty. */

export type DiffKind = "same" | "added" | "removed";

export interface DiffRow {
  kind: DiffKind;
  left: string | null;
  right: string | null;
}

export function diffLines(previous: string, proposed: string): DiffRow[] {
  const a = previous === "" ? [] : previous.split("\n");
  const b = proposed === "" ? [] : proposed.split("\n");
  const rows: DiffRow[] = [];

  // LCS length table.
  const table: number[][] = Array.from({ length: a.length + 1 }, () =>
    new Array<number>(b.length + 1).fill(0),
  );
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      table[i]![j] =
        a[i] === b[j]
          ? table[i + 1]![j + 1]! + 1
          : Math.max(table[i + 1]![j]!, table[i]![j + 1]!);
    }
  }

  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      rows.push({ kind: "same", left: a[i]!, right: b[j]! });
      i++;
      j++;
    } else if (table[i + 1]![j]! >= table[i]![j + 1]!) {
      rows.push({ kind: "removed", left: a[i]!, right: null });
      i++;
    } else {
      rows.push({ kind: "added", left: null, right: b[j]! });
      j++;
    }
  }
  while (i < a.length) {
    rows.push({ kind: "removed", left: a[i]!, right: null });
    i++;
  }
  while (j < b.length) {
    rows.push({ kind: "added", left: null, right: b[j]! });
    j++;
  }
  return rows;
}

export function diffStats(rows: DiffRow[]): { added: number; removed: number } {
  let added = 0;
  let removed = 0;
  for (const row of rows) {
    if (row.kind === "added") added++;
    if (row.kind === "removed") removed++;
  }
  return { added, removed };
}
