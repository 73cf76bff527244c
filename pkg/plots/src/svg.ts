// Small deterministic SVG string builders: no DOM, no timestamps, no
// randomness, so identical inputs give byte-identical figures.

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { top: 48, right: 168, bottom: 64, left: 76 };

export const PALETTE = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#e377c2",
];

export function plotArea() {
    return {
        x: MARGIN.left,
        y: MARGIN.top,
        w: WIDTH - MARGIN.left - MARGIN.right,
        h: HEIGHT - MARGIN.top - MARGIN.bottom,
    };
}

/** Fixed two-decimal pixel coordinates keep the output stable and small. */
export const px = (v: number): string => v.toFixed(2);

export function escapeXml(s: string): string {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export function el(
    tag: string,
    attrs: Record<string, string | number>,
    body = ""
): string {
    const parts = Object.entries(attrs)
        .map(([k, v]) => `${k}="${v}"`)
        .join(" ");
    return body === ""
        ? `<${tag} ${parts}/>`
        : `<${tag} ${parts}>${body}</${tag}>`;
}

export function textEl(
    x: number,
    y: number,
    s: string,
    opts: { anchor?: string; size?: number; fill?: string; weight?: string } = {}
): string {
    return el(
        "text",
        {
            x: px(x),
            y: px(y),
            "text-anchor": opts.anchor ?? "start",
            "font-size": opts.size ?? 12,
            fill: opts.fill ?? "#222",
            ...(opts.weight ? { "font-weight": opts.weight } : {}),
        },
        escapeXml(s)
    );
}

export function polyline(
    points: [number, number][],
    color: string,
    opts: { width?: number; dash?: string } = {}
): string {
    return el("polyline", {
        points: points.map(([x, y]) => `${px(x)},${px(y)}`).join(" "),
        fill: "none",
        stroke: color,
        "stroke-width": opts.width ?? 1.8,
        ...(opts.dash ? { "stroke-dasharray": opts.dash } : {}),
    });
}

export function markers(points: [number, number][], color: string, r = 3): string {
    return points
        .map(([x, y]) => el("circle", { cx: px(x), cy: px(y), r, fill: color }))
        .join("");
}

/** Axis description: data-to-pixel map plus tick values and labels. */
export interface AxisSpec {
    ticks: number[];
    format: (v: number) => string;
    map: (v: number) => number;
}

export function bottomAxis(spec: AxisSpec, area: ReturnType<typeof plotArea>, label: string): string {
    const y0 = area.y + area.h;
    const parts: string[] = [];
    for (const t of spec.ticks) {
        const x = spec.map(t);
        parts.push(el("line", { x1: px(x), y1: px(y0), x2: px(x), y2: px(y0 + 5), stroke: "#222" }));
        parts.push(textEl(x, y0 + 18, spec.format(t), { anchor: "middle", size: 11 }));
    }
    parts.push(textEl(area.x + area.w / 2, y0 + 38, label, { anchor: "middle", size: 13 }));
    return parts.join("");
}

export function leftAxis(spec: AxisSpec, area: ReturnType<typeof plotArea>, label: string): string {
    const parts: string[] = [];
    for (const t of spec.ticks) {
        const y = spec.map(t);
        parts.push(el("line", { x1: px(area.x - 5), y1: px(y), x2: px(area.x), y2: px(y), stroke: "#222" }));
        parts.push(textEl(area.x - 8, y + 4, spec.format(t), { anchor: "end", size: 11 }));
    }
    parts.push(
        el(
            "g",
            { transform: `translate(${px(area.x - 48)},${px(area.y + area.h / 2)}) rotate(-90)` },
            textEl(0, 0, label, { anchor: "middle", size: 13 })
        )
    );
    return parts.join("");
}

export function frame(area: ReturnType<typeof plotArea>): string {
    return el("rect", {
        x: px(area.x),
        y: px(area.y),
        width: px(area.w),
        height: px(area.h),
        fill: "none",
        stroke: "#222",
        "stroke-width": 1,
    });
}

export interface LegendEntry {
    label: string;
    color: string;
    dash?: string;
}

/** Legend in the reserved right margin, one swatch line per series. */
export function legend(entries: LegendEntry[]): string {
    const x = WIDTH - MARGIN.right + 14;
    const parts: string[] = [];
    entries.forEach((entry, i) => {
        const y = MARGIN.top + 10 + i * 20;
        parts.push(
            el("line", {
                x1: px(x),
                y1: px(y),
                x2: px(x + 22),
                y2: px(y),
                stroke: entry.color,
                "stroke-width": 2.2,
                ...(entry.dash ? { "stroke-dasharray": entry.dash } : {}),
            })
        );
        parts.push(textEl(x + 28, y + 4, entry.label, { size: 12 }));
    });
    return parts.join("");
}

export function title(s: string): string {
    return textEl(WIDTH / 2, 26, s, { anchor: "middle", size: 15, weight: "600" });
}

export function footer(kind: string, source: string, hash: string | null): string {
    const line = `${kind} | source ${source} | config ${hash ?? "-"}`;
    return textEl(MARGIN.left, HEIGHT - 10, line, { size: 10, fill: "#666" });
}

export function document(body: string): string {
    return (
        `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
        `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">` +
        el("rect", { x: 0, y: 0, width: WIDTH, height: HEIGHT, fill: "#ffffff" }) +
        body +
        `</svg>\n`
    );
}
