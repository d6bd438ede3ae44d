/* tslint:disable */
/* eslint-disable */

/**
 * Helmholtz training session stepped from JavaScript.
 */
export class Trainer {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[rel_l2, exact..., predicted...]` on the evaluation grid.
     */
    field(): Float64Array;
    /**
     * Current loss multipliers, one per term.
     */
    lambdas(): Float64Array;
    constructor(model: string, layers: number, units: number, seed: bigint, grid: number);
    /**
     * Runs `n` Adam steps and returns the last total loss.
     */
    step(n: number): number;
    steps(): number;
}

/**
 * Steady cavity on an `n x n` grid. Returns `[iterations, residual, u..., v...]`
 * with `u[j*n + i]` at `x = i/(n-1)`, `y = j/(n-1)`.
 */
export function cavity(re: number, n: number): Float64Array;

/**
 * Rows of `[s, lambda_aw, lambda_iaw]` for `n` raw uncertainties spread
 * over `[s_min, s_max]`, flattened.
 */
export function weight_curve(gamma: number, s_min: number, s_max: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_trainer_free: (a: number, b: number) => void;
    readonly cavity: (a: number, b: number) => [number, number, number, number];
    readonly trainer_field: (a: number) => [number, number, number, number];
    readonly trainer_lambdas: (a: number) => [number, number, number, number];
    readonly trainer_new: (a: number, b: number, c: number, d: number, e: bigint, f: number) => [number, number, number];
    readonly trainer_step: (a: number, b: number) => [number, number, number];
    readonly trainer_steps: (a: number) => number;
    readonly weight_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
