/* tslint:disable */
/* eslint-disable */

/**
 * A learner the page can advance a few rounds at a time. Arm `best`
 * has mean loss 0.3 and every other arm 0.7.
 */
export class Session {
    free(): void;
    [Symbol.dispose](): void;
    constructor(k: number, eta: number, best: number, seed: bigint);
    state(): string;
    /**
     * Plays `rounds` rounds and returns the new state.
     */
    step(rounds: number): string;
}

/**
 * Cumulative regret and movement of SMB and Exp3 on one stochastic-gap stream.
 */
export function bandit_curves(k: number, horizon: number, gap: number, seed: bigint): string;

/**
 * Posted prices over time against uniform-value buyers.
 */
export function pricing_path(horizon: number, tau_bar: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly bandit_curves: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly pricing_path: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly session_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly session_state: (a: number) => [number, number, number, number];
    readonly session_step: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
