/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curve_free: (a: number, b: number) => void;
export const __wbg_fit_free: (a: number, b: number) => void;
export const __wbg_get_fit_intercept: (a: number) => number;
export const __wbg_get_fit_r_squared: (a: number) => number;
export const __wbg_get_fit_slope: (a: number) => number;
export const __wbg_set_fit_intercept: (a: number, b: number) => void;
export const __wbg_set_fit_r_squared: (a: number, b: number) => void;
export const __wbg_set_fit_slope: (a: number, b: number) => void;
export const curve_mean_log10: (a: number) => [number, number];
export const curve_std_log10: (a: number) => [number, number];
export const curve_x: (a: number) => [number, number];
export const fit_slope: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const oracle_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
export const simulate_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: bigint) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
