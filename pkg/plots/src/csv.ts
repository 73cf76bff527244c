import { readFileSync } from "node:fs";
import { existsSync } from "node:fs";
import Papa from "papaparse";

import { PlotDataError, PlotKind, REQUIRED_COLUMNS, Table } from "./types.js";

/** Read a CSV of numbers into a Table. Every cell must parse to a finite number. */
export function readTable(path: string): Table {
    if (!existsSync(path)) {
        throw new PlotDataError(`input file not found: ${path}`);
    }
    const text = readFileSync(path, "utf8");
    const parsed = Papa.parse<Record<string, string>>(text, {
        header: true,
        skipEmptyLines: true,
    });
    const columns = parsed.meta.fields ?? [];
    if (columns.length === 0) {
        throw new PlotDataError(`input CSV is empty: ${path}`);
    }
    const rows: Record<string, number>[] = [];
    for (let r = 0; r < parsed.data.length; r++) {
        const raw = parsed.data[r];
        const row: Record<string, number> = {};
        for (const col of columns) {
            const cell = raw[col];
            const value = Number(cell);
            if (cell === undefined || cell === "" || !Number.isFinite(value)) {
                throw new PlotDataError(
                    `non-numeric value ${JSON.stringify(cell ?? "")} in column ${col}, data row ${r + 1}`
                );
            }
            row[col] = value;
        }
        rows.push(row);
    }
    if (rows.length === 0) {
        throw new PlotDataError(`input CSV has no data rows: ${path}`);
    }
    return { columns, rows };
}

/** Refuse tables that lack the columns the plot kind draws. */
export function requireColumns(table: Table, kind: PlotKind): void {
    const missing = REQUIRED_COLUMNS[kind].filter((c) => !table.columns.includes(c));
    if (missing.length > 0) {
        throw new PlotDataError(
            `input CSV missing required column(s) for ${kind}: ${missing.join(", ")}`
        );
    }
}

/** Group rows by a column value, preserving first-seen order and row order. */
export function groupBy(table: Table, column: string): Map<number, Record<string, number>[]> {
    const groups = new Map<number, Record<string, number>[]>();
    for (const row of table.rows) {
        const key = row[column];
        const bucket = groups.get(key);
        if (bucket) {
            bucket.push(row);
        } else {
            groups.set(key, [row]);
        }
    }
    return groups;
}
