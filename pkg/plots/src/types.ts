export type PlotKind =
    | "sigma_vs_gamma"
    | "anisotropy_polar"
    | "energy_vs_epsilon"
    | "profile_1d"
    | "field_2d_heatmap";

export const PLOT_KINDS: PlotKind[] = [
    "sigma_vs_gamma",
    "anisotropy_polar",
    "energy_vs_epsilon",
    "profile_1d",
    "field_2d_heatmap",
];

/** Columns each kind needs in its input CSV. */
export const REQUIRED_COLUMNS: Record<PlotKind, string[]> = {
    sigma_vs_gamma: ["angle", "gamma", "sigma"],
    anisotropy_polar: ["angle", "gamma", "sigma"],
    energy_vs_epsilon: ["epsilon", "E_total", "sharp_target"],
    profile_1d: ["i", "value"],
    field_2d_heatmap: ["i", "j", "value"],
};

export interface PlotJob {
    kind: PlotKind;
    input: string;
    output: string;
}

/** Parsed CSV: column names in file order plus numeric rows in file order. */
export interface Table {
    columns: string[];
    rows: Record<string, number>[];
}

/** Raised for bad inputs (missing files, missing columns, empty data). */
export class PlotDataError extends Error {}
