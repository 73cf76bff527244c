import { createHash } from "node:crypto";
import { existsSync, readFileSync } from "node:fs";
import { dirname, join } from "node:path";

/** Recursively sort object keys so the hash ignores serialization order. */
function canonical(value: unknown): unknown {
    if (Array.isArray(value)) {
        return value.map(canonical);
    }
    if (value !== null && typeof value === "object") {
        const out: Record<string, unknown> = {};
        for (const key of Object.keys(value as Record<string, unknown>).sort()) {
            out[key] = canonical((value as Record<string, unknown>)[key]);
        }
        return out;
    }
    return value;
}

/**
 * Short hash of the solver config recorded in the manifest.json sitting next
 * to the input CSV. Returns null when no manifest is present; the figure
 * footer then shows "config -".
 */
export function configHash(csvPath: string): string | null {
    const manifestPath = join(dirname(csvPath), "manifest.json");
    if (!existsSync(manifestPath)) {
        return null;
    }
    let manifest: unknown;
    try {
        manifest = JSON.parse(readFileSync(manifestPath, "utf8"));
    } catch {
        return null;
    }
    const config = (manifest as Record<string, unknown>)?.config;
    if (config === undefined) {
        return null;
    }
    const digest = createHash("sha256")
        .update(JSON.stringify(canonical(config)))
        .digest("hex");
    return digest.slice(0, 12);
}
