import { describe, expect, it } from "vitest";

import { EncoderLoadError, HashEncoder, loadTransformerEncoder } from "../src/encoders";

describe("HashEncoder", () => {
    it("is deterministic for identical titles", async () => {
        const enc = new HashEncoder(64);
        const [a] = await enc.encode(["Breaking news tonight"]);
        const [b] = await enc.encode(["Breaking news tonight"]);
        expect(a).toEqual(b);
    });

    it("produces unit-norm vectors of the requested dimension", async () => {
        const enc = new HashEncoder(128);
        const [v] = await enc.encode(["markets rally on earnings"]);
        expect(v).toHaveLength(128);
        const norm = Math.sqrt(v.reduce((acc, c) => acc + c * c, 0));
        expect(norm).toBeCloseTo(1.0, 12);
    });

    it("distinguishes different titles", async () => {
        const enc = new HashEncoder(256);
        const [a, b] = await enc.encode(["alpha bravo charlie", "delta echo foxtrot"]);
        expect(a).not.toEqual(b);
    });

    it("rejects token-free titles", async () => {
        const enc = new HashEncoder(64);
        await expect(enc.encode(["???"])).rejects.toThrow(/tokens/);
    });

    it("rejects dimensions below 8", () => {
        expect(() => new HashEncoder(4)).toThrow(/at least 8/);
    });
});

describe("loadTransformerEncoder", () => {
    it("raises EncoderLoadError when the backend is unavailable", async () => {
        // this sandbox has no transformers.js install or model cache
        await expect(loadTransformerEncoder("Xenova/all-MiniLM-L6-v2")).rejects.toThrow(
            EncoderLoadError,
        );
    });
});
