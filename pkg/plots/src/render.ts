import { mkdirSync, writeFileSync } from "node:fs";
import { basename, dirname } from "node:path";
import { scaleLinear, scaleLog } from "d3-scale";
import { interpolateViridis } from "d3-scale-chromatic";

import { groupBy, readTable, requireColumns } from "./csv.js";
import { configHash } from "./manifest.js";
import {
    AxisSpec,
    LegendEntry,
    MARGIN,
    PALETTE,
    WIDTH,
    bottomAxis,
    document,
    el,
    footer,
    frame,
    leftAxis,
    legend,
    markers,
    plotArea,
    polyline,
    px,
    textEl,
    title,
} from "./svg.js";
import { PlotDataError, PlotJob, REQUIRED_COLUMNS, Table } from "./types.js";

export interface RenderResult {
    svgPath: string;
    sidecarPath: string;
}

/** Compact general-purpose number label, like printf %g. */
const fmtG = (v: number): string => String(Number(v.toPrecision(6)));

const degrees = (rad: number): string => `${Number((rad * 180 / Math.PI).toPrecision(4))}°`;

function uniqueSorted(values: number[]): number[] {
    return [...new Set(values)].sort((a, b) => a - b);
}

// ── per-kind figure builders ────────────────────────────────────────────

function sigmaVsGamma(table: Table): string {
    const area = plotArea();
    const gammas = table.rows.map((r) => r.gamma);
    const sigmas = table.rows.map((r) => r.sigma);
    const x = scaleLinear().domain([Math.min(...gammas), Math.max(...gammas)])
        .range([area.x, area.x + area.w]);
    const y = scaleLinear().domain([Math.min(...sigmas), Math.max(...sigmas)])
        .nice().range([area.y + area.h, area.y]);

    const gammaTicks = uniqueSorted(gammas);
    const xa: AxisSpec = {
        ticks: gammaTicks.length <= 10 ? gammaTicks : x.ticks(6),
        format: fmtG,
        map: (v) => x(v),
    };
    const ya: AxisSpec = { ticks: y.ticks(6), format: fmtG, map: (v) => y(v) };

    const parts: string[] = [frame(area)];
    const entries: LegendEntry[] = [];
    let i = 0;
    for (const [angle, rows] of groupBy(table, "angle")) {
        const color = PALETTE[i % PALETTE.length];
        const pts: [number, number][] = rows.map((r) => [x(r.gamma), y(r.sigma)]);
        parts.push(polyline(pts, color));
        parts.push(markers(pts, color));
        entries.push({ label: `angle ${degrees(angle)}`, color });
        i++;
    }
    parts.push(bottomAxis(xa, area, "surfactant load"));
    parts.push(leftAxis(ya, area, "surface tension"));
    parts.push(legend(entries));
    parts.push(title("Surface tension vs surfactant load"));
    return parts.join("");
}

function anisotropyPolar(table: Table): string {
    const area = plotArea();
    const cx = area.x + area.w / 2;
    const cy = area.y + area.h / 2;
    const R = Math.min(area.w, area.h) / 2 - 12;
    const r = scaleLinear().domain([0, Math.max(...table.rows.map((p) => p.sigma))])
        .nice().range([0, R]);

    const parts: string[] = [];
    // radial grid rings with value labels
    for (const t of r.ticks(4)) {
        if (t === 0) continue;
        parts.push(el("circle", { cx: px(cx), cy: px(cy), r: px(r(t)), fill: "none", stroke: "#ddd" }));
        parts.push(textEl(cx + 4, cy - r(t) - 3, fmtG(t), { size: 10, fill: "#888" }));
    }
    // angular spokes every 45 degrees
    for (let k = 0; k < 8; k++) {
        const a = (k * Math.PI) / 4;
        const ex = cx + R * Math.cos(a);
        const ey = cy - R * Math.sin(a);
        parts.push(el("line", { x1: px(cx), y1: px(cy), x2: px(ex), y2: px(ey), stroke: "#eee" }));
        parts.push(
            textEl(cx + (R + 14) * Math.cos(a), cy - (R + 14) * Math.sin(a) + 4, `${k * 45}°`, {
                anchor: "middle",
                size: 10,
                fill: "#888",
            })
        );
    }

    const entries: LegendEntry[] = [];
    let i = 0;
    for (const [gamma, rows] of groupBy(table, "gamma")) {
        const color = PALETTE[i % PALETTE.length];
        const pts: [number, number][] = rows.map((p) => [
            cx + r(p.sigma) * Math.cos(p.angle),
            cy - r(p.sigma) * Math.sin(p.angle),
        ]);
        parts.push(polyline(pts, color));
        parts.push(markers(pts, color));
        entries.push({ label: `load ${fmtG(gamma)}`, color });
        i++;
    }
    parts.push(legend(entries));
    parts.push(title("Surface tension anisotropy"));
    return parts.join("");
}

function energyVsEpsilon(table: Table): string {
    const area = plotArea();
    const epsilons = table.rows.map((r) => r.epsilon);
    const totals = table.rows.map((r) => r.E_total);
    const target = table.rows[0].sharp_target;

    const x = scaleLog().domain([Math.min(...epsilons), Math.max(...epsilons)])
        .range([area.x, area.x + area.w]);
    const y = scaleLinear()
        .domain([Math.min(...totals, target), Math.max(...totals, target)])
        .nice().range([area.y + area.h, area.y]);

    const xa: AxisSpec = { ticks: uniqueSorted(epsilons), format: fmtG, map: (v) => x(v) };
    const ya: AxisSpec = { ticks: y.ticks(6), format: fmtG, map: (v) => y(v) };

    const pts: [number, number][] = table.rows.map((r) => [x(r.epsilon), y(r.E_total)]);
    const parts: string[] = [
        frame(area),
        polyline([[area.x, y(target)], [area.x + area.w, y(target)]], PALETTE[1], { dash: "6 4" }),
        polyline(pts, PALETTE[0]),
        markers(pts, PALETTE[0]),
        bottomAxis(xa, area, "interface width (log scale)"),
        leftAxis(ya, area, "energy"),
        legend([
            { label: "diffuse energy", color: PALETTE[0] },
            { label: "sharp limit target", color: PALETTE[1], dash: "6 4" },
        ]),
        title("Diffuse energy vs interface width"),
    ];
    return parts.join("");
}

function profile1d(table: Table): string {
    const area = plotArea();
    const is = table.rows.map((r) => r.i);
    const vals = table.rows.map((r) => r.value);
    const x = scaleLinear().domain([Math.min(...is), Math.max(...is)])
        .range([area.x, area.x + area.w]);
    const y = scaleLinear().domain([Math.min(...vals), Math.max(...vals)])
        .nice().range([area.y + area.h, area.y]);

    const xa: AxisSpec = { ticks: x.ticks(6), format: fmtG, map: (v) => x(v) };
    const ya: AxisSpec = { ticks: y.ticks(6), format: fmtG, map: (v) => y(v) };
    const pts: [number, number][] = table.rows.map((r) => [x(r.i), y(r.value)]);
    return [
        frame(area),
        polyline(pts, PALETTE[0]),
        bottomAxis(xa, area, "cell index"),
        leftAxis(ya, area, "value"),
        legend([{ label: "value", color: PALETTE[0] }]),
        title("Field profile"),
    ].join("");
}

function field2dHeatmap(table: Table): string {
    const area = plotArea();
    const ni = Math.max(...table.rows.map((r) => r.i)) + 1;
    const nj = Math.max(...table.rows.map((r) => r.j)) + 1;
    const vals = table.rows.map((r) => r.value);
    const vmin = Math.min(...vals);
    const vmax = Math.max(...vals);
    const norm = (v: number) => (vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.5);

    const cw = area.w / ni;
    const ch = area.h / nj;
    const cells = table.rows
        .map((r) =>
            el("rect", {
                x: px(area.x + r.i * cw),
                y: px(area.y + (nj - 1 - r.j) * ch),
                width: px(cw),
                height: px(ch),
                fill: interpolateViridis(norm(r.value)),
            })
        )
        .join("");

    const x = scaleLinear().domain([0, ni - 1]);
    const y = scaleLinear().domain([0, nj - 1]);
    const xa: AxisSpec = {
        ticks: x.ticks(Math.min(6, ni)).filter(Number.isInteger),
        format: (v) => String(v),
        map: (v) => area.x + (v + 0.5) * cw,
    };
    const ya: AxisSpec = {
        ticks: y.ticks(Math.min(6, nj)).filter(Number.isInteger),
        format: (v) => String(v),
        map: (v) => area.y + (nj - 1 - v + 0.5) * ch,
    };

    // colorbar in the legend margin, high values on top
    const bx = WIDTH - MARGIN.right + 24;
    const segments = 24;
    const sh = area.h / segments;
    const bar = Array.from({ length: segments }, (_, k) => {
        const t = 1 - k / (segments - 1);
        return el("rect", {
            x: px(bx),
            y: px(area.y + k * sh),
            width: 18,
            height: px(sh + 0.5),
            fill: interpolateViridis(t),
        });
    }).join("");

    return [
        el("g", { "shape-rendering": "crispEdges" }, cells),
        frame(area),
        bottomAxis(xa, area, "axis 0 index"),
        leftAxis(ya, area, "axis 1 index"),
        el("g", {}, bar),
        textEl(bx, area.y - 8, "value", { size: 12 }),
        textEl(bx + 24, area.y + 10, fmtG(vmax), { size: 11 }),
        textEl(bx + 24, area.y + area.h, fmtG(vmin), { size: 11 }),
        title("Field heatmap"),
    ].join("");
}

// ── entry point ─────────────────────────────────────────────────────────

const BUILDERS: Record<string, (table: Table) => string> = {
    sigma_vs_gamma: sigmaVsGamma,
    anisotropy_polar: anisotropyPolar,
    energy_vs_epsilon: energyVsEpsilon,
    profile_1d: profile1d,
    field_2d_heatmap: field2dHeatmap,
};

/**
 * Render one figure plus its data sidecar. The sidecar holds exactly the
 * rows and columns the figure draws, in CSV order, so the plotted values
 * can be recovered without reparsing the image.
 */
export function render(job: PlotJob): RenderResult {
    const lower = job.output.toLowerCase();
    if (lower.endsWith(".png")) {
        throw new PlotDataError("PNG output is not supported; use .svg");
    }
    if (!lower.endsWith(".svg")) {
        throw new PlotDataError(`output must be an .svg path: ${job.output}`);
    }

    const table = readTable(job.input);
    requireColumns(table, job.kind);
    const hash = configHash(job.input);

    const body = BUILDERS[job.kind](table) + footer(job.kind, basename(job.input), hash);
    const svg = document(body);

    const columns = REQUIRED_COLUMNS[job.kind];
    const sidecar = {
        kind: job.kind,
        source: basename(job.input),
        columns,
        data: table.rows.map((row) => {
            const out: Record<string, number> = {};
            for (const c of columns) out[c] = row[c];
            return out;
        }),
    };

    const sidecarPath = job.output + ".data.json";
    mkdirSync(dirname(job.output), { recursive: true });
    writeFileSync(job.output, svg);
    writeFileSync(sidecarPath, JSON.stringify(sidecar, null, 2) + "\n");
    return { svgPath: job.output, sidecarPath };
}
