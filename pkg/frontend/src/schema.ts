/**
 * Turns the manager's served JSON Schema into field descriptors the
 * wizard renders from. No field is hand-coded: enums become selectors,
 * bounded integers become sliders, objects recurse into groups.
 */

export interface SchemaNode {
  type?: string;
  enum?: unknown[];
  properties?: Record<string, SchemaNode>;
  required?: string[];
  additionalProperties?: boolean;
  items?: SchemaNode;
  minItems?: number;
  maxItems?: number;
  minimum?: number;
  maximum?: number;
  exclusiveMinimum?: number;
  exclusiveMaximum?: number;
  [key: string]: unknown;
}

export type FieldSpec =
  | { control: "select"; path: string; name: string; options: string[] }
  | { control: "range"; path: string; name: string; min: number; max: number }
  | {
      control: "number";
      path: string;
      name: string;
      min?: number;
      max?: number;
      exclusiveMin?: number;
      integer: boolean;
    }
  | { control: "toggle"; path: string; name: string }
  | { control: "text"; path: string; name: string }
  | { control: "tuple"; path: string; name: string; size: number; item: FieldSpec }
  | { control: "list"; path: string; name: string; maxItems?: number; item: FieldSpec }
  | { control: "group"; path: string; name: string; fields: FieldSpec[] };

function lastSegment(path: string): string {
  const parts = path.split(".");
  return parts[parts.length - 1] ?? path;
}

export function fieldSpec(node: SchemaNode, path: string): FieldSpec {
  const name = lastSegment(path);
  if (node.enum) {
    return { control: "select", path, name, options: node.enum.map(String) };
  }
  switch (node.type) {
    case "integer":
      if (node.minimum !== undefined && node.maximum !== undefined) {
        // a closed integer interval renders as a slider, e.g. blur level 1-10
        return { control: "range", path, name, min: node.minimum, max: node.maximum };
      }
      return {
        control: "number",
        path,
        name,
        min: node.minimum,
        max: node.maximum,
        exclusiveMin: node.exclusiveMinimum,
        integer: true,
      };
    case "number":
      return {
        control: "number",
        path,
        name,
        min: node.minimum,
        max: node.maximum,
        exclusiveMin: node.exclusiveMinimum,
        integer: false,
      };
    case "boolean":
      return { control: "toggle", path, name };
    case "string":
      return { control: "text", path, name };
    case "array": {
      const item = fieldSpec(node.items ?? {}, `${path}[]`);
      if (node.minItems !== undefined && node.minItems === node.maxItems) {
        return { control: "tuple", path, name, size: node.minItems, item };
      }
      return { control: "list", path, name, maxItems: node.maxItems, item };
    }
    case "object": {
      const fields = Object.entries(node.properties ?? {}).map(([key, child]) =>
        fieldSpec(child, path ? `${path}.${key}` : key),
      );
      return { control: "group", path, name, fields };
    }
    default:
      return { control: "text", path, name };
  }
}

/** Descriptors for one top-level section of the config document. */
export function sectionFields(schema: SchemaNode, section: string): FieldSpec {
  const node = schema.properties?.[section];
  if (!node) throw new Error(`schema has no section '${section}'`);
  return fieldSpec(node, section);
}

/** Flatten a spec tree into its leaf controls (groups dissolved). */
export function leafControls(spec: FieldSpec): FieldSpec[] {
  if (spec.control === "group") {
    return spec.fields.flatMap(leafControls);
  }
  return [spec];
}
