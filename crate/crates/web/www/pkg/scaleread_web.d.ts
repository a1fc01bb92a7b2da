/* tslint:disable */
/* eslint-disable */

/**
 * A rendered scene as canvas-ready RGBA plus its ground truth.
 */
export class Scene {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    rgba(): Uint8Array;
    readonly height: number;
    /**
     * `"plunger"` or `"meniscus"`.
     */
    readonly indicator: string;
    /**
     * Level the scene was rendered at.
     */
    readonly level: number;
    readonly minorStep: number;
    readonly width: number;
}

/**
 * JSON-encoded [`Report`].
 */
export function benchmarkReport(): string;

/**
 * JSON-encoded [`ReadSummary`].
 */
export function readFrame(rgba: Uint8Array, width: number, height: number, indicator: string): string;

export function renderScene(kind: string, level: number, rotation_deg: number, scale_factor: number, noise: number, seed: number): Scene;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_scene_free: (a: number, b: number) => void;
    readonly benchmarkReport: () => [number, number, number, number];
    readonly readFrame: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly renderScene: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly scene_height: (a: number) => number;
    readonly scene_indicator: (a: number) => [number, number];
    readonly scene_level: (a: number) => number;
    readonly scene_minorStep: (a: number) => number;
    readonly scene_rgba: (a: number) => [number, number];
    readonly scene_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
