import { describe, expect, it } from "vitest";

import {
  formatModelTable,
  lookupMethod,
  REGISTRY,
  UnknownMethodError,
} from "../src/registry.js";

describe("model catalog", () => {
  it("has unique method tags", () => {
    const tags = REGISTRY.map((e) => e.methodTag);
    expect(new Set(tags).size).toBe(tags.length);
  });

  it("offers the configurable methods at the supported dimensionalities", () => {
    const configurable = REGISTRY.filter((e) => e.configurableDimension);
    expect(configurable.length).toBe(8);
    for (const e of configurable) {
      expect([512, 2048, 4096, 8192]).toContain(e.dimension);
    }
    const byTag = Object.fromEntries(REGISTRY.map((e) => [e.methodTag, e]));
    expect(byTag.cosplace512.dimension).toBe(512);
    expect(byTag.cosplace512.backbone).toBe("ResNet18");
    expect(byTag.cosplace2048.dimension).toBe(2048);
    expect(byTag.cosplace2048.backbone).toBe("ResNet101");
    expect(byTag.eigenplaces512.dimension).toBe(512);
    expect(byTag.eigenplaces512.backbone).toBe("ResNet18");
    expect(byTag.eigenplaces2048.dimension).toBe(2048);
    expect(byTag.eigenplaces2048.backbone).toBe("ResNet101");
    expect(byTag.mixvpr512.dimension).toBe(512);
    expect(byTag.mixvpr512.backbone).toBe("ResNet50");
    expect(byTag.mixvpr4096.dimension).toBe(4096);
    expect(byTag.salad2048.dimension).toBe(2048);
    expect(byTag.salad8192.dimension).toBe(8192);
    expect(byTag.salad8192.backbone).toMatch(/DINOv2/);
  });

  it("records fixed-dimension methods as such", () => {
    const fixed = REGISTRY.filter((e) => !e.configurableDimension);
    const byTag = Object.fromEntries(fixed.map((e) => [e.methodTag, e.dimension]));
    expect(byTag).toEqual({ patchnetvlad: 4096, anyloc: 49152, megaloc: 8448 });
  });

  it("keeps ViT input sizes divisible by the patch size", () => {
    for (const e of REGISTRY) {
      if (e.backbone.includes("/14")) {
        expect(e.preprocessing.inputSize[0] % 14).toBe(0);
        expect(e.preprocessing.inputSize[1] % 14).toBe(0);
      }
    }
  });

  it("looks methods up by tag and names the alternatives on a miss", () => {
    expect(lookupMethod("mixvpr4096").weightsSource).toMatch(/^https:\/\//);
    expect(() => lookupMethod("resnet")).toThrow(UnknownMethodError);
    expect(() => lookupMethod("resnet")).toThrow(/known methods:.*cosplace512/);
  });

  it("lists every method in the table output", () => {
    const table = formatModelTable();
    for (const e of REGISTRY) {
      expect(table).toContain(e.methodTag);
      expect(table).toContain(String(e.dimension));
    }
  });
});
