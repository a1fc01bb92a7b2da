/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_scene_free: (a: number, b: number) => void;
export const benchmarkReport: () => [number, number, number, number];
export const readFrame: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const renderScene: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const scene_height: (a: number) => number;
export const scene_indicator: (a: number) => [number, number];
export const scene_level: (a: number) => number;
export const scene_minorStep: (a: number) => number;
export const scene_rgba: (a: number) => [number, number];
export const scene_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
