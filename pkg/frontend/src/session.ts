/** Session state for the iterative loop.
 *
 * Closed iterations are immutable history; editing the draft never touches
 * them, and every submit creates a new iteration on the server.
 */

import { ProblemSpecDraft } from "./types.js";
import { FieldError, validateSpec } from "./validate.js";

export interface IterationSummary {
  id: number;
  specName: string;
  recordCount: number;
}

export class Session {
  private draftSpec: ProblemSpecDraft;
  private history: readonly IterationSummary[] = [];
  private selectedIteration: number | null = null;
  private selectedRecords: string[] = [];
  private treeTarget = "cost";

  constructor(initial: ProblemSpecDraft) {
    this.draftSpec = structuredClone(initial);
  }

  get draft(): ProblemSpecDraft {
    return this.draftSpec;
  }

  get iterations(): readonly IterationSummary[] {
    return this.history;
  }

  get selection(): { iteration: number | null; records: string[];
                     target: string } {
    return { iteration: this.selectedIteration,
             records: [...this.selectedRecords], target: this.treeTarget };
  }

  /** Apply a partial edit to the draft; history is untouched. */
  editDraft(patch: Partial<ProblemSpecDraft>): FieldError[] {
    this.draftSpec = { ...structuredClone(this.draftSpec),
                       ...structuredClone(patch) };
    return validateSpec(this.draftSpec);
  }

  validate(): FieldError[] {
    return validateSpec(this.draftSpec);
  }

  /** Record a newly created iteration; ids must strictly increase. */
  closeIteration(summary: IterationSummary): void {
    const last = this.history[this.history.length - 1];
    if (last && summary.id <= last.id) {
      throw new Error("iteration ids must strictly increase");
    }
    this.history = Object.freeze([...this.history, Object.freeze(summary)]);
    this.selectedIteration = summary.id;
  }

  selectIteration(id: number): void {
    if (!this.history.some((it) => it.id === id)) {
      throw new Error(`unknown iteration ${id}`);
    }
    this.selectedIteration = id;
    this.selectedRecords = [];
  }

  selectRecords(recordIds: string[]): void {
    this.selectedRecords = [...recordIds];
  }

  setTreeTarget(target: string): void {
    this.treeTarget = target;
  }
}
