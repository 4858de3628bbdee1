/** Expand/collapse navigation over a rendered decision tree document.
 *
 * The underlying document is never mutated; view state lives in a set of
 * expanded node paths.  Subtrees containing designs from the current
 * iteration carry a green highlight flag.  Clicking a leaf lists its
 * designs by replaying the split tests down the path over the record
 * documents (pure filtering, no metric is recomputed).
 */

import { formatDurationDays, formatPercent } from "./format.js";
import { RecordDoc, TreeDoc, TreeNodeDoc } from "./types.js";

export type NodePath = string;       // e.g. "root.left.right"

export interface TreeNodeView {
  path: NodePath;
  label: string;
  count: number;
  percent: string;
  mean: number;
  highlighted: boolean;              // contains current-iteration designs
  isLeaf: boolean;
  expanded: boolean;
  children: TreeNodeView[];
}

export class TreeExplorer {
  private expanded = new Set<NodePath>(["root"]);
  private selected: NodePath | null = null;

  constructor(readonly doc: TreeDoc) {}

  node(path: NodePath): TreeNodeDoc {
    let node = this.doc.root;
    for (const step of path.split(".").slice(1)) {
      const next = step === "left" ? node.left : node.right;
      if (!next) throw new Error(`no node at ${path}`);
      node = next;
    }
    return node;
  }

  isExpanded(path: NodePath): boolean {
    return this.expanded.has(path);
  }

  toggle(path: NodePath): void {
    if (this.expanded.has(path)) this.expanded.delete(path);
    else this.expanded.add(path);
  }

  expandAll(): void {
    const walk = (node: TreeNodeDoc, path: NodePath) => {
      this.expanded.add(path);
      if (node.left && node.right) {
        walk(node.left, `${path}.left`);
        walk(node.right, `${path}.right`);
      }
    };
    walk(this.doc.root, "root");
  }

  select(path: NodePath): void {
    this.selected = path;
  }

  get selection(): NodePath | null {
    return this.selected;
  }

  /** View of the tree honoring expansion state. */
  view(): TreeNodeView {
    const build = (node: TreeNodeDoc, path: NodePath,
                   label: string): TreeNodeView => {
      const expanded = this.expanded.has(path);
      const isLeaf = !node.left || !node.right;
      const children = !isLeaf && expanded
        ? [build(node.left!, `${path}.left`, node.left_label ?? ""),
           build(node.right!, `${path}.right`, node.right_label ?? "")]
        : [];
      return {
        path,
        label,
        count: node.count,
        percent: formatPercent(node.percent),
        mean: node.mean,
        highlighted: node.contains_current,
        isLeaf,
        expanded,
        children,
      };
    };
    return build(this.doc.root, "root", `all designs (${this.doc.target})`);
  }

  /** Designs that fall into the node at `path`, by replaying split tests. */
  leafRecords(path: NodePath, records: RecordDoc[]): RecordDoc[] {
    let node = this.doc.root;
    let keep = records.filter((r) => !r.failed
      && r.quoted_cost_cents !== null && r.quoted_lead_hours !== null);
    for (const step of path.split(".").slice(1)) {
      const test = splitTest(node);
      keep = keep.filter((r) => (step === "left") === test(r));
      const next = step === "left" ? node.left : node.right;
      if (!next) throw new Error(`no node at ${path}`);
      node = next;
    }
    return keep;
  }
}

function splitTest(node: TreeNodeDoc): (r: RecordDoc) => boolean {
  const feature = node.feature;
  const threshold = node.threshold;
  if (feature === undefined || threshold === undefined) {
    throw new Error("cannot descend through a leaf");
  }
  return (r) => featureValue(r, feature) <= threshold;
}

function featureValue(record: RecordDoc, feature: string): number {
  switch (feature) {
    case "cost":
      return (record.quoted_cost_cents ?? 0) / 100;
    case "lead_time":
      return (record.quoted_lead_hours ?? 0) / 24;
    case "mass":
      return record.mass_kg;
    case "compliance":
      return record.compliance;
  }
  const onehot = feature.match(/^(material|method|supplier) is (.+)$/);
  if (onehot) {
    const [, column, value] = onehot;
    const actual = column === "material" ? record.material
      : column === "method" ? record.method
      : record.supplier_id ?? "unknown";
    return actual === value ? 1 : 0;
  }
  throw new Error(`unknown feature ${feature}`);
}

/** Static HTML rendering of the current view (green = current iteration). */
export function renderTreeHtml(view: TreeNodeView): string {
  const cls = view.highlighted ? "node current" : "node";
  const body = `<span class="${cls}" data-path="${view.path}">` +
    `${view.label} - n=${view.count} (${view.percent})</span>`;
  if (!view.children.length) return `<li>${body}</li>`;
  const children = view.children.map(renderTreeHtml).join("");
  return `<li>${body}<ul>${children}</ul></li>`;
}

export { formatDurationDays };
